"""Module entry point: python -m handoverkit."""
from .cli import main

if __name__ == "__main__":
    main()
