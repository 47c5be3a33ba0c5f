import logging
from typing import Any, Self

import numpy as np
from pydantic import BaseModel, ConfigDict
from pydantic_core import to_jsonable_python

logger = logging.getLogger(__name__)


def _jsonable_fallback(value: Any) -> Any:
    """Encode numpy values; complex entries become ``[re, im]`` pairs."""
    if isinstance(value, np.ndarray):
        if np.iscomplexobj(value):
            return np.stack([value.real, value.imag], axis=-1).tolist()
        return value.tolist()
    if isinstance(value, np.generic):
        item = value.item()
        if isinstance(item, complex):
            return [item.real, item.imag]
        return item
    if isinstance(value, complex):
        return [value.real, value.imag]
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


class RecordModel(BaseModel):
    """
    Base class of every result record.

    Provides the conversion helpers used by the repository and the CLI
    (`to_dict`, `dump_model`, `load`).
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    def __str__(self) -> str:
        return f"{self.__class__.__name__}({', '.join(self.summary_fields())})"

    def summary_fields(self) -> list[str]:
        return [f"{name}={value!r}" for name, value in self.__dict__.items() if isinstance(value, int | float | str)]

    def to_dict(self, with_meta: bool = False, fields: set[str] | None = None) -> dict[str, Any]:
        """
        Plain dictionary of the record's fields.

        Args:
            with_meta: If True, include a '__metadata__' key with the record class and package version.
            fields: An optional set of field names to include.

        Returns:
            A dictionary containing the record's data.
        """
        data = self.model_dump(include=fields)
        if with_meta:
            from incompat import __version__  # noqa: PLC0415

            data["__metadata__"] = {
                "model": f"{self.__class__.__module__}:{self.__class__.__name__}",
                "version": __version__,
            }
        return data

    def dump_model(self, with_meta: bool = False, fields: set[str] | None = None) -> dict[str, Any]:
        """
        JSON-serializable dict representation; numpy arrays become nested lists.
        """
        plain = self.to_dict(with_meta=with_meta, fields=fields)
        try:
            return to_jsonable_python(plain, fallback=_jsonable_fallback)
        except Exception as e:
            logger.error(f"Error making dictionary for {self.__class__.__name__} JSON-serializable: {e}", exc_info=True)
            raise

    @classmethod
    def load(cls, data: dict[str, Any]) -> Self:
        """
        Build a record from a dictionary, ignoring keys that are not fields.

        Raises:
            TypeError: if `data` is not a dict.
        """
        if not isinstance(data, dict):
            raise TypeError(f"Expected a dict to load {cls.__name__}, got {type(data).__name__}")
        known = set(cls.model_fields)
        ignored = sorted(set(data) - known)
        if ignored:
            logger.debug(f"Ignoring unknown keys for {cls.__name__}: {ignored}")
        return cls.model_validate({key: value for key, value in data.items() if key in known})
