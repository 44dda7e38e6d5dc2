import argparse
import logging

from nopast.utils.command import Command
from nopast.utils.harness import summarize


class Summarize(Command):
    @classmethod
    def options(cls, parser: argparse.ArgumentParser):
        sub_parser = parser.add_parser(
            "summarize", help="Recompute mean log error and CI from stored runs.csv files"
        )
        super().options(sub_parser)

    def run(self):
        df = summarize(self.options.out)
        print(df.to_string(index=False))
        logging.info(f"Max deviation from summary: {df['deviation'].max()}")
