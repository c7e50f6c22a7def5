from convex_bounds.cli import main

main()
