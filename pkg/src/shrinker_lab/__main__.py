"""Entry point for 'python -m shrinker_lab' and the 'sl_run' script.

The thread cap from the environment is applied to the BLAS/OpenMP pools
before numpy is imported.
"""

from .sl_common import apply_thread_cap


def main(cliArgs=None):
    apply_thread_cap()

    from .cli_runner import main as run_main

    run_main(cliArgs)


if __name__ == '__main__':
    main()  # pragma: no cover
