"""JSON export with numpy conversion and the artifact manifest"""

import hashlib
import json
import math
import os
from datetime import datetime, timezone

import numpy as np

MANIFEST_NAME = 'manifest.json'


def to_jsonable(value):
    """Plain Python structure for json.dumps; non-finite floats become None"""
    if isinstance(value, dict):
        return {str(key): to_jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(item) for item in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(item) for item in value.tolist()]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def file_sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, 'rb') as handle:
        for chunk in iter(lambda: handle.read(65536), b''):
            digest.update(chunk)
    return digest.hexdigest()


class JsonExporter:
    def __init__(self, log_func):
        self.log = log_func

    def export(self, data, output_path):
        """
        Write data as UTF-8 JSON, keys in insertion order

        Args:
            data: dict / list structure, numpy values allowed
            output_path: target file

        Returns:
            output_path
        """
        text = json.dumps(to_jsonable(data), indent=2, ensure_ascii=False)
        with open(output_path, 'w', encoding='utf-8', newline='\n') as handle:
            handle.write(text + '\n')
        self.log(f"Wrote {os.path.basename(output_path)}")
        return output_path

    def write_manifest(self, output_dir, scenario=None):
        """
        List every file under output_dir with its SHA-256

        The manifest holds the only timestamp of a run.

        Returns:
            Path of manifest.json
        """
        artifacts = []
        for root, _, files in os.walk(output_dir):
            for name in files:
                path = os.path.join(root, name)
                relative = os.path.relpath(path, output_dir).replace(os.sep, '/')
                if relative == MANIFEST_NAME:
                    continue
                artifacts.append({'path': relative, 'sha256': file_sha256(path), 'bytes': os.path.getsize(path)})
        artifacts.sort(key=lambda item: item['path'])
        manifest = {
            'scenario': scenario,
            'generated_at': datetime.now(timezone.utc).isoformat(timespec='seconds'),
            'artifacts': artifacts,
        }
        return self.export(manifest, os.path.join(output_dir, MANIFEST_NAME))
