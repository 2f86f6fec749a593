import sys

from src.cli import run

# python main.py <subcommand> ...
if __name__ == "__main__":
    sys.exit(run(sys.argv[1:]))
