"""Check records, campaign reports and their serializations.

JSON is the source of truth and carries no timings, so two runs of the
same configuration write identical bytes; the CSV summary keeps the
per-check wall-clock seconds.
"""
import collections
import csv
import io
import json
import logging
import os
import platform

import numpy as np
import scipy

from ncgilab.exceptions import NcgiValueError


logger = logging.getLogger(__name__)

SCHEMA = 1
VERDICTS = ('PASS', 'FAIL', 'SKIP')
CSV_COLUMNS = ('check_id', 'anchor', 'verdict', 'residual', 'tolerance', 'seconds')


def _plain(value):
    """JSON-ready form: complex numbers as ``[re, im]``, arrays as lists."""
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, (np.complexfloating,)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, dict):
        return collections.OrderedDict((str(k), _plain(v)) for k, v in value.items())
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


class CheckRecord(collections.namedtuple(
        'CheckRecord', 'check_id anchor campaign inputs values residual tolerance verdict seconds')):
    """One verified identity or computed index.

    ``inputs`` holds everything :func:`ncgilab.campaigns.replay` needs to
    rerun the check alone.
    """
    __slots__ = ()

    def __new__(cls, check_id, anchor, campaign, inputs, values, residual, tolerance,
                verdict, seconds=0.0):
        if verdict not in VERDICTS:
            raise NcgiValueError("Expected a verdict in {}, but got {!r}".format(VERDICTS, verdict))
        return super(CheckRecord, cls).__new__(
            cls, check_id, anchor, campaign, _plain(inputs), _plain(values),
            None if residual is None else float(residual), float(tolerance), verdict,
            float(seconds),
        )

    def to_dict(self):
        out = collections.OrderedDict()
        for field in self._fields:
            if field != 'seconds':
                out[field] = getattr(self, field)
        return out

    @classmethod
    def from_dict(cls, data):
        return cls(**dict(data))


def environment():
    return collections.OrderedDict([
        ('python', platform.python_version()),
        ('numpy', np.__version__),
        ('scipy', scipy.__version__),
    ])


class Report(object):
    """Records of one run, ordered by check id, with the configuration echo."""

    def __init__(self, config, records=(), env=None, banners=None):
        self.config = config
        self.records = sorted(records, key=lambda r: r.check_id)
        self.environment = env or environment()
        self.banners = list(banners or [])

    def __eq__(self, other):
        return isinstance(other, Report) and self.to_dict() == other.to_dict()

    def add(self, record):
        self.records.append(record)
        self.records.sort(key=lambda r: r.check_id)

    def find(self, check_id):
        for record in self.records:
            if record.check_id == check_id:
                return record
        raise NcgiValueError("Expected a record id in the report, but got {!r}".format(check_id))

    @property
    def failed(self):
        return [r for r in self.records if r.verdict == 'FAIL']

    @property
    def exit_status(self):
        return 1 if self.failed else 0

    def counts(self):
        return collections.Counter(r.verdict for r in self.records)

    def to_dict(self):
        return collections.OrderedDict([
            ('schema', SCHEMA),
            ('config', _plain(self.config)),
            ('environment', self.environment),
            ('banners', self.banners),
            ('records', [r.to_dict() for r in self.records]),
        ])

    @classmethod
    def from_dict(cls, data):
        if data.get('schema') != SCHEMA:
            raise NcgiValueError(
                "Expected report schema {}, but got {!r}".format(SCHEMA, data.get('schema'))
            )
        return cls(data['config'], [CheckRecord.from_dict(r) for r in data['records']],
                   data['environment'], data.get('banners'))


def to_json(report):
    return json.dumps(report.to_dict(), indent=2, sort_keys=False) + '\n'


def to_csv(report):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator='\n')
    writer.writerow(CSV_COLUMNS)
    for r in report.records:
        writer.writerow([r.check_id, r.anchor, r.verdict,
                         '' if r.residual is None else '{:.6e}'.format(r.residual),
                         '{:.3e}'.format(r.tolerance), '{:.3f}'.format(r.seconds)])
    return buf.getvalue()


def to_text(report):
    lines = []
    for banner in report.banners:
        lines.append('*** {} ***'.format(banner))
    counts = report.counts()
    lines.append('{} checks: {} PASS, {} FAIL, {} SKIP'.format(
        len(report.records), counts['PASS'], counts['FAIL'], counts['SKIP']))
    for r in report.records:
        residual = '-' if r.residual is None else '{:.2e}'.format(r.residual)
        lines.append('{:<5} {:<48} {:>10} (tol {:.1e})  {}'.format(
            r.verdict, r.check_id, residual, r.tolerance, r.anchor))
    return '\n'.join(lines) + '\n'


RENDERERS = collections.OrderedDict([('json', to_json), ('csv', to_csv), ('text', to_text)])
EXTENSIONS = {'json': 'json', 'csv': 'csv', 'text': 'txt'}


def emit(report, formats, out, stem='report'):
    """Write the report in each of ``formats`` under directory ``out``.

    :return: (list) paths written
    :raises NcgiValueError: on an unknown format or unwritable directory
    """
    paths = []
    try:
        os.makedirs(out, exist_ok=True)
    except OSError as e:
        raise NcgiValueError("Expected a writable output directory {}, but got {}".format(out, e))
    for fmt in formats:
        if fmt not in RENDERERS:
            raise NcgiValueError("Expected a format in {}, but got {!r}".format(tuple(RENDERERS), fmt))
        path = os.path.join(out, '{}.{}'.format(stem, EXTENSIONS[fmt]))
        with open(path, 'w', newline='') as f:
            f.write(RENDERERS[fmt](report))
        logger.info('wrote %s', path)
        paths.append(path)
    return paths


def load_json(path):
    with open(path) as f:
        return Report.from_dict(json.load(f, object_pairs_hook=collections.OrderedDict))
