"""
Sub-command features of the biot-th command line

Each feature is self-contained with:
- models.py: Feature-specific request models (when it has any)
- command.py: register_command(subparsers, service)
- instructions.md: Help text shown by --help
"""
