import argparse
import logging

from nopast.utils import store
from nopast.utils.command import Command
from nopast.utils.harness import compare


class Compare(Command):
    @classmethod
    def options(cls, parser: argparse.ArgumentParser):
        sub_parser = parser.add_parser(
            "compare", help="Paired final-error table across the cells of an experiment"
        )
        super().options(sub_parser)
        sub_parser.add_argument(
            "--reference",
            type=str,
            help="Cell to pair against (Default: the first gp_hedge cell)",
            default=None,
        )

    def run(self):
        df = compare(store.load_summary(self.options.out), self.options.reference)
        logging.info(f"Paired against {df.attrs['reference']}")
        print(df.to_string(index=False))
