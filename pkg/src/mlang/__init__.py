"""The M language toolchain: lexer, parser, checker, interpreter, tensor
engine, model registry, CLI, and a stdio protocol server."""

__version__ = "0.1.0"
