"""Command-line entry point ``ncgilab``.

::

    ncgilab run --model circle-shifted --campaign all --out ./reports
    ncgilab run --config run.yaml --replay index/local-formula/winding=+2
    ncgilab list-models

Exit status: 0 when no check failed, 1 when some check failed, 2 on a
usage or configuration error.
"""
import argparse
import logging
import sys

from ncgilab.campaigns import replay, run_campaign
from ncgilab.config import CAMPAIGNS, FORMATS, load_config
from ncgilab.exceptions import NcgiException
from ncgilab.report import emit, to_text


logger = logging.getLogger(__name__)

MODELS = (
    ('circle', 'D = diag(k) on l2(Z); odd, q = 1, no spectral gap'),
    ('circle-shifted', 'D = diag(k + 1/2) on l2(Z); odd, q = 1, gap 1/4'),
    ('power:<p>', 'D = sign(k + 1/2)|k + 1/2|^(1/p); odd, q = p >= 1'),
    ('oscillator', 'D^2 = diag(k, k + 1) on l2(N) x C^2; even, q = 2'),
    ('double:<model>:<mu>', 'the double of <model> with D_mu; invertible for mu != 0'),
)


def _campaign_list(text):
    names = [c.strip() for c in text.split(',') if c.strip()]
    if not names:
        raise argparse.ArgumentTypeError('expected at least one campaign')
    unknown = [c for c in names if c not in CAMPAIGNS]
    if unknown:
        raise argparse.ArgumentTypeError(
            'unknown campaign(s) {}; choose from {}'.format(', '.join(unknown), ', '.join(CAMPAIGNS))
        )
    return names


def _format_list(text):
    names = [f.strip() for f in text.split(',') if f.strip()]
    unknown = [f for f in names if f not in FORMATS]
    if not names or unknown:
        raise argparse.ArgumentTypeError('expected formats from {}'.format(', '.join(FORMATS)))
    return names


def build_parser():
    parser = argparse.ArgumentParser(
        prog='ncgilab',
        description='Numerical verification campaigns for the local index formula '
                    'on lattice spectral triples.',
    )
    commands = parser.add_subparsers(dest='command')
    commands.required = True

    run = commands.add_parser('run', help='run verification campaigns')
    run.add_argument('--config', help='YAML run configuration; flags override its keys')
    run.add_argument('--model', help='catalogue model name (see list-models)')
    run.add_argument('--campaign', dest='campaigns', type=_campaign_list,
                     help='comma-separated campaigns from {}'.format(', '.join(CAMPAIGNS)))
    run.add_argument('--tol-scale', dest='tol_scale', type=float,
                     help='multiplier applied to every acceptance tolerance')
    run.add_argument('--out', help='output directory for reports')
    run.add_argument('--seed', type=int, help='seed for randomized probe tuples')
    run.add_argument('--replay', metavar='CHECK_ID', help='re-run a single check by record id')
    run.add_argument('--format', dest='formats', type=_format_list,
                     help='comma-separated report formats from {}'.format(', '.join(FORMATS)))
    run.add_argument('--log-level', dest='log_level',
                     choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'], help='logging level')

    commands.add_parser('list-models', help='list the model catalogue')
    return parser


def _list_models(out):
    width = max(len(name) for name, _ in MODELS)
    for name, description in MODELS:
        out.write('{}  {}\n'.format(name.ljust(width), description))
    return 0


def _run(args, out):
    overrides = {key: getattr(args, key)
                 for key in ('model', 'campaigns', 'tol_scale', 'out', 'seed', 'formats',
                             'log_level')}
    config = load_config(args.config, overrides)
    logging.basicConfig(level=getattr(logging, config.log_level),
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    if args.replay:
        report = replay(config, args.replay)
        stem = 'replay'
    else:
        report = run_campaign(config)
        stem = 'report'
    paths = emit(report, config.formats, config.out, stem)
    out.write(to_text(report))
    for path in paths:
        out.write('wrote {}\n'.format(path))
    return report.exit_status


def main(argv=None, out=None):
    """Entry point; returns the exit status.

    :param argv: (list) arguments, ``sys.argv[1:]`` by default
    :param out: file-like object for the summary, stdout by default
    """
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    if args.command == 'list-models':
        return _list_models(out)
    try:
        return _run(args, out)
    except NcgiException as e:
        logger.error('%s', e)
        sys.stderr.write('ncgilab: error: {}\n'.format(e))
        return 2


if __name__ == '__main__':
    sys.exit(main())
