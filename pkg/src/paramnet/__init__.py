"""Linear networks of parametrically coupled oscillators: compile, scatter, amplify."""

__version__ = "0.1.0"
