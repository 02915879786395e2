import sys

# Settings and logging come first so every module logs with the same format
from settings import configure_logging, load_settings
from errors import ConfigurationError


class AppManager:
    def __init__(self, argv=None):
        self.argv = sys.argv[1:] if argv is None else list(argv)
        self.settings = load_settings()
        configure_logging(self.settings)

    def run(self):
        """Run the command line and exit with its code."""
        from cli.app import run
        sys.exit(run(self.argv, self.settings))


if __name__ == "__main__":
    try:
        app_manager = AppManager()
    except ConfigurationError as e:
        sys.stderr.write(f"Configuration error: {e}\n")
        sys.exit(e.exit_code)
    app_manager.run()
