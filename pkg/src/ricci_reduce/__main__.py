from ricci_reduce.cli import main

main()
