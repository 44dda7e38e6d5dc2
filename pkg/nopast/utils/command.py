from typing import Any, Optional


class Command:
    @classmethod
    def options(cls, parser):
        parser.add_argument(
            "--out",
            "-o",
            type=str,
            help="""
                Where all the experiment artifacts are stored (Default: ./results)
            """,
            default="./results",
        )
        parser.add_argument(
            "--config",
            "-c",
            type=str,
            help="TOML file whose keys mirror this command's flags (Default: None)",
            default=None,
        )
        parser.add_argument(
            "-d",
            "--debug",
            dest="debug_mode",
            action="store_true",
            help="Debug mode on.",
        )
        parser.set_defaults(command=cls)

    def __init__(self, options: Any) -> None:
        self.options = options

    def log_dir(self) -> Optional[str]:
        return None

    def run(self):
        raise NotImplementedError
