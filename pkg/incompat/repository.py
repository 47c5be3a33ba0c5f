import csv
import json
import logging
from collections.abc import Sequence
from pathlib import Path
from typing import Any

from incompat.model import RecordModel

logger = logging.getLogger(__name__)

SUFFIXES = (".json", ".jsonl", ".csv")


class RecordRepository[T: RecordModel]:
    """
    File-backed storage for result records.

    The format follows the path suffix: ``.json`` holds one record (or a list of
    records), ``.jsonl`` one record per line and ``.csv`` one row per record over
    a fixed column list. Output is deterministic: keys are sorted and floats use
    the shortest round-trip representation.
    """

    _model_cls: type[T]

    def __init__(self, model_cls: type[T]):
        self._model_cls = model_cls

    @staticmethod
    def _prepare(path: Path | str) -> Path:
        path = Path(path)
        if path.suffix not in SUFFIXES:
            raise ValueError(f"unsupported output suffix {path.suffix!r}; expected one of {SUFFIXES}")
        path.parent.mkdir(parents=True, exist_ok=True)
        return path

    # --- Writers ---
    def write_json(self, path: Path | str, records: T | Sequence[T], with_meta: bool = False) -> Path:
        path = self._prepare(path)
        if isinstance(records, RecordModel):
            payload: Any = records.dump_model(with_meta=with_meta)
        else:
            payload = [record.dump_model(with_meta=with_meta) for record in records]
        path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")
        logger.debug(f"Wrote {self._model_cls.__name__} JSON to {path}")
        return path

    def write_jsonl(self, path: Path | str, records: Sequence[T], fields: Sequence[str] | None = None) -> Path:
        path = self._prepare(path)
        include = set(fields) if fields else None
        lines = [json.dumps(record.dump_model(fields=include), sort_keys=True) for record in records]
        path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
        logger.debug(f"Wrote {len(lines)} {self._model_cls.__name__} line(s) to {path}")
        return path

    def write_csv(self, path: Path | str, records: Sequence[T], fields: Sequence[str]) -> Path:
        path = self._prepare(path)
        with path.open("w", encoding="utf-8", newline="") as handle:
            writer = csv.DictWriter(handle, fieldnames=list(fields), lineterminator="\n")
            writer.writeheader()
            for record in records:
                writer.writerow(record.dump_model(fields=set(fields)))
        logger.debug(f"Wrote {len(records)} {self._model_cls.__name__} row(s) to {path}")
        return path

    def write(self, path: Path | str, records: T | Sequence[T], fields: Sequence[str] | None = None) -> Path:
        """Dispatch on the suffix of `path`; CSV output requires `fields`."""
        suffix = Path(path).suffix
        many = [records] if isinstance(records, RecordModel) else list(records)
        if suffix == ".csv":
            if not fields:
                raise ValueError("CSV output needs an explicit column list")
            return self.write_csv(path, many, fields)
        if suffix == ".jsonl":
            return self.write_jsonl(path, many, fields)
        return self.write_json(path, records)

    # --- Readers ---
    def read_json(self, path: Path | str) -> list[T]:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        items = payload if isinstance(payload, list) else [payload]
        return [self._model_cls.load(item) for item in items]

    def read_jsonl(self, path: Path | str) -> list[T]:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        return [self._model_cls.load(json.loads(line)) for line in lines if line.strip()]

    def read_csv(self, path: Path | str) -> list[T]:
        """Rows are validated by the record model, which converts the text cells back to numbers."""
        with Path(path).open(encoding="utf-8", newline="") as handle:
            return [self._model_cls.load(dict(row)) for row in csv.DictReader(handle)]

    def read(self, path: Path | str) -> list[T]:
        suffix = Path(path).suffix
        if suffix == ".csv":
            return self.read_csv(path)
        if suffix == ".jsonl":
            return self.read_jsonl(path)
        if suffix == ".json":
            return self.read_json(path)
        raise ValueError(f"unsupported input suffix {suffix!r}; expected one of {SUFFIXES}")
