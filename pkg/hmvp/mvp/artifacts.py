"""
CSV/JSON artifacts and the run manifest written by every command.
"""

import csv
import dataclasses
import enum
import json
import logging
import math
from pathlib import Path

import numpy as np
from django.conf import settings
from django.core.serializers.json import DjangoJSONEncoder

logger = logging.getLogger(__name__)

_NON_FINITE = {math.inf: 'inf', -math.inf: '-inf'}


def json_safe(obj):
    """
    Recursively converts dataclasses, numpy values, paths and enums into
    plain JSON types. Non-finite floats become "inf", "-inf" and "nan".
    """
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        obj = obj.as_dict() if hasattr(obj, 'as_dict') \
            else dataclasses.asdict(obj)
    if isinstance(obj, dict):
        return {str(k): json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_safe(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [json_safe(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if math.isnan(value):
            return 'nan'
        return _NON_FINITE.get(value, value)
    if isinstance(obj, enum.Enum):
        return str(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def format_number(value):
    """
    Scientific notation with 17 significant digits for floats; anything
    else is written as is.
    """
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (float, np.floating)):
        return format(float(value), '.16e')
    return value


def write_json(payload, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', encoding='utf-8') as f:
        json.dump(json_safe(payload), f, cls=DjangoJSONEncoder, indent=2,
                  sort_keys=True, allow_nan=False)
        f.write('\n')
    logger.debug('wrote %s', path)
    return path


def write_csv(rows, path, columns=None):
    """
    Writes dict rows to an RFC-4180 CSV file. The header is ``columns``
    or the keys of the first row.

    :returns: (path, number of rows)
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open('w', newline='', encoding='utf-8') as f:
        writer = None
        for row in rows:
            if writer is None:
                writer = csv.DictWriter(f, fieldnames=columns or list(row),
                                        lineterminator='\r\n')
                writer.writeheader()
            writer.writerow({k: format_number(v) for k, v in row.items()})
            count += 1
        if writer is None and columns:
            csv.writer(f, lineterminator='\r\n').writerow(columns)
    logger.debug('wrote %s rows to %s', count, path)
    return path, count


@dataclasses.dataclass
class RunManifest:
    """
    What a command was asked to do and which files it produced.
    """
    command: str
    parameters: dict
    tool_version: str = dataclasses.field(
        default_factory=lambda: settings.HMVP_VERSION)
    outputs: list = dataclasses.field(default_factory=list)
    wall_time: float = 0.0
    exit_code: int = 0

    def add_output(self, path):
        self.outputs.append(str(path))

    def as_dict(self):
        return {'command': self.command, 'parameters': self.parameters,
                'tool_version': self.tool_version, 'outputs': self.outputs,
                'wall_time': self.wall_time, 'exit_code': self.exit_code}

    def write(self, directory):
        return write_json(self, Path(directory) / f'{self.command}-manifest.json')
