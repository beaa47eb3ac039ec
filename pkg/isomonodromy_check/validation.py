"""
JSON Typedef (RFC 8927) schema checking and instance validation, reporting
error indicators (instance path, schema path) so configuration problems can be
located precisely.

https://www.rfc-editor.org/rfc/rfc8927
"""
# Standard
from datetime import datetime
from typing import Any, Callable, Dict, Iterable, List, Optional, Set
import dataclasses
import math

# First Party
import alog

log = alog.use_channel("VALID")

TypeValidators = Dict[str, Callable[[Any], bool]]


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _int_in(low: int, high: int) -> Callable[[Any], bool]:
    def check(value: Any) -> bool:
        return (
            _is_number(value)
            and float(value).is_integer()
            and low <= value <= high
        )

    return check


def _is_complex_pair(value: Any) -> bool:
    """[re, im] with two finite numbers"""
    return (
        isinstance(value, list)
        and len(value) == 2
        and all(_is_number(part) and math.isfinite(part) for part in value)
    )


JTD_TYPE_VALIDATORS: TypeValidators = {
    "boolean": lambda x: isinstance(x, bool),
    "float32": _is_number,
    "float64": _is_number,
    "int8": _int_in(-(2**7), 2**7 - 1),
    "uint8": _int_in(0, 2**8 - 1),
    "int16": _int_in(-(2**15), 2**15 - 1),
    "uint16": _int_in(0, 2**16 - 1),
    "int32": _int_in(-(2**31), 2**31 - 1),
    "uint32": _int_in(0, 2**32 - 1),
    "string": lambda x: isinstance(x, str),
    "timestamp": lambda x: isinstance(x, (str, datetime)),
}

# Standard types plus complex numbers written as [re, im]
COMPLEX_TYPE_VALIDATORS: TypeValidators = {
    **JTD_TYPE_VALIDATORS,
    "complex": _is_complex_pair,
}

JTD_TYPES = list(JTD_TYPE_VALIDATORS)


@dataclasses.dataclass(frozen=True)
class JtdError:
    """An RFC 8927 error indicator"""

    instance_path: str
    schema_path: str

    def __str__(self) -> str:
        return f"value at '{self.instance_path or '/'}' violates schema '{self.schema_path}'"


## Interface ###################################################################


def is_valid_jtd(schema: Dict[str, Any], valid_types: Optional[Iterable[str]] = None) -> bool:
    """Determine whether the given dict is a valid JTD schema

    Args:
        schema:  Dict[str, Any]
            The candidate schema

    Kwargs:
        valid_types:  Optional[Iterable[str]]
            Type names allowed in "type" forms; defaults to the standard ones

    Returns:
        is_valid:  bool
            True if the schema is valid
    """
    types = set(valid_types) if valid_types is not None else set(JTD_TYPES)
    if not _is_string_key_dict(schema):
        return False
    definitions = schema.get("definitions", {})
    if not _is_string_key_dict(definitions):
        log.debug4("Invalid jtd: 'definitions' is not a dict of strings")
        return False
    return all(
        _check_schema(value, types, definitions, root=False)
        for value in definitions.values()
    ) and _check_schema(schema, types, definitions, root=True)


def jtd_errors(
    obj: Any,
    schema: Dict[str, Any],
    type_validators: Optional[TypeValidators] = None,
) -> List[JtdError]:
    """All error indicators of obj against schema, in document order"""
    validators = type_validators or JTD_TYPE_VALIDATORS
    if not is_valid_jtd(schema, validators.keys()):
        raise ValueError(f"Invalid schema: {schema}")
    errors: List[JtdError] = []
    _collect(obj, schema, validators, schema.get("definitions", {}), "", "", errors)
    return errors


def validate_jtd(
    obj: Any,
    schema: Dict[str, Any],
    type_validators: Optional[TypeValidators] = None,
) -> bool:
    """True if obj matches schema"""
    return not jtd_errors(obj, schema, type_validators)


## Implementation Details ######################################################

_SHARED_KEYS = {"nullable", "metadata", "definitions"}
_PROPERTY_KEYS = {"properties", "optionalProperties", "additionalProperties"}


def _is_string_key_dict(value: Any) -> bool:
    return isinstance(value, dict) and all(isinstance(key, str) for key in value)


def _form(schema: Dict[str, Any]) -> Optional[str]:
    """Name of the schema form, or None for an invalid keyword set"""
    keys = set(schema) - _SHARED_KEYS
    if not keys:
        return "empty"
    if keys in ({"ref"}, {"type"}, {"enum"}, {"elements"}, {"values"}):
        return next(iter(keys))
    if keys == {"discriminator", "mapping"}:
        return "discriminator"
    if keys & {"properties", "optionalProperties"} and keys <= _PROPERTY_KEYS:
        return "properties"
    return None


def _check_schema(
    schema: Any, types: Set[str], definitions: Dict[str, Any], *, root: bool
) -> bool:
    """Recursive schema check (RFC 8927 section 2)"""
    if not _is_string_key_dict(schema):
        return False
    if not isinstance(schema.get("nullable", False), bool):
        return False
    if not _is_string_key_dict(schema.get("metadata", {})):
        return False
    if "definitions" in schema and not root:
        log.debug4("Invalid jtd: 'definitions' outside the root")
        return False

    def sub(value: Any) -> bool:
        return _check_schema(value, types, definitions, root=False)

    form = _form(schema)
    if form == "empty":
        return True
    if form == "ref":
        return isinstance(schema["ref"], str) and schema["ref"] in definitions
    if form == "type":
        return isinstance(schema["type"], str) and schema["type"] in types
    if form == "enum":
        values = schema["enum"]
        return (
            isinstance(values, list)
            and bool(values)
            and all(isinstance(value, str) for value in values)
            and len(set(values)) == len(values)
        )
    if form in ("elements", "values"):
        return sub(schema[form])
    if form == "properties":
        required = schema.get("properties", {})
        optional = schema.get("optionalProperties", {})
        return (
            isinstance(schema.get("additionalProperties", False), bool)
            and _is_string_key_dict(required)
            and _is_string_key_dict(optional)
            and bool(required or optional)
            and not set(required) & set(optional)
            and all(sub(value) for value in list(required.values()) + list(optional.values()))
        )
    if form == "discriminator":
        tag, mapping = schema["discriminator"], schema["mapping"]
        nullable = schema.get("nullable", False)
        return (
            isinstance(tag, str)
            and _is_string_key_dict(mapping)
            and all(
                sub(value)
                and _form(value) == "properties"
                and value.get("nullable", False) == nullable
                and tag not in value.get("properties", {})
                and tag not in value.get("optionalProperties", {})
                for value in mapping.values()
            )
        )
    log.debug4("Invalid jtd: bad keyword set %s", sorted(schema))
    return False


def _collect(
    obj: Any,
    schema: Dict[str, Any],
    validators: TypeValidators,
    definitions: Dict[str, Any],
    instance_path: str,
    schema_path: str,
    errors: List[JtdError],
):
    """Recursive instance validation (RFC 8927 section 3)"""
    if obj is None and schema.get("nullable", False):
        return

    def fail(instance: str, schema_at: str):
        log.debug4("JTD error at %s (schema %s)", instance, schema_at)
        errors.append(JtdError(instance, schema_at))

    form = _form(schema)
    if form == "empty":
        return
    if form == "ref":
        _collect(
            obj,
            definitions[schema["ref"]],
            validators,
            definitions,
            instance_path,
            f"/definitions/{schema['ref']}",
            errors,
        )
    elif form == "type":
        if not validators[schema["type"]](obj):
            fail(instance_path, f"{schema_path}/type")
    elif form == "enum":
        if obj not in schema["enum"]:
            fail(instance_path, f"{schema_path}/enum")
    elif form == "elements":
        if not isinstance(obj, list):
            fail(instance_path, f"{schema_path}/elements")
            return
        for idx, entry in enumerate(obj):
            _collect(
                entry,
                schema["elements"],
                validators,
                definitions,
                f"{instance_path}/{idx}",
                f"{schema_path}/elements",
                errors,
            )
    elif form == "values":
        if not _is_string_key_dict(obj):
            fail(instance_path, f"{schema_path}/values")
            return
        for key, entry in obj.items():
            _collect(
                entry,
                schema["values"],
                validators,
                definitions,
                f"{instance_path}/{key}",
                f"{schema_path}/values",
                errors,
            )
    elif form == "properties":
        _collect_properties(
            obj, schema, validators, definitions, instance_path, schema_path, errors
        )
    elif form == "discriminator":
        tag = schema["discriminator"]
        if not _is_string_key_dict(obj):
            fail(instance_path, f"{schema_path}/discriminator")
        elif tag not in obj:
            fail(instance_path, f"{schema_path}/discriminator")
        elif not isinstance(obj[tag], str):
            fail(f"{instance_path}/{tag}", f"{schema_path}/discriminator")
        elif obj[tag] not in schema["mapping"]:
            fail(f"{instance_path}/{tag}", f"{schema_path}/mapping")
        else:
            _collect_properties(
                obj,
                schema["mapping"][obj[tag]],
                validators,
                definitions,
                instance_path,
                f"{schema_path}/mapping/{obj[tag]}",
                errors,
                skip=tag,
            )


def _collect_properties(
    obj: Any,
    schema: Dict[str, Any],
    validators: TypeValidators,
    definitions: Dict[str, Any],
    instance_path: str,
    schema_path: str,
    errors: List[JtdError],
    skip: Optional[str] = None,
):
    if not _is_string_key_dict(obj):
        key = "properties" if "properties" in schema else "optionalProperties"
        errors.append(JtdError(instance_path, f"{schema_path}/{key}"))
        return
    required = schema.get("properties", {})
    optional = schema.get("optionalProperties", {})
    for key, sub_schema in required.items():
        if key not in obj:
            errors.append(JtdError(instance_path, f"{schema_path}/properties/{key}"))
            continue
        _collect(
            obj[key],
            sub_schema,
            validators,
            definitions,
            f"{instance_path}/{key}",
            f"{schema_path}/properties/{key}",
            errors,
        )
    for key, sub_schema in optional.items():
        if key in obj:
            _collect(
                obj[key],
                sub_schema,
                validators,
                definitions,
                f"{instance_path}/{key}",
                f"{schema_path}/optionalProperties/{key}",
                errors,
            )
    if not schema.get("additionalProperties", False):
        for key in obj:
            if key not in required and key not in optional and key != skip:
                errors.append(JtdError(f"{instance_path}/{key}", schema_path))
