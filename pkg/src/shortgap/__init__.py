"""Sieve-theory laboratory for bounded gaps between primes in short intervals."""

__version__ = "0.1.0"
