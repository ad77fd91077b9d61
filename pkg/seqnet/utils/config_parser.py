import configparser
import os
import re
from typing import Dict, Optional, Sequence, Tuple

from pydantic import ValidationError

import logging

from seqnet.core.config import settings
from seqnet.core.errors import ConfigError, InvalidParameterError, InvalidScheduleError
from seqnet.models.request import ExperimentConfig, UtilityName
from seqnet.services.games import ResponseFunction
from seqnet.services.planner import (
    DiscountSchedule,
    UtilitySpec,
    discount_farsighted,
    discount_geometric,
    discount_myopic,
)

logger = logging.getLogger(__name__)

SECTION_PATTERN = re.compile(r"^\s*\[([^\]]+)\]")
KEY_PATTERN = re.compile(r"^\s*([^=:#;\s\[][^=:]*?)\s*[=:]")


def _locate(text: str) -> Tuple[Dict[str, int], Dict[Tuple[str, str], int]]:
    """Line numbers of section headers and of keys within their section."""
    sections: Dict[str, int] = {}
    keys: Dict[Tuple[str, str], int] = {}
    current = None
    for number, line in enumerate(text.splitlines(), start=1):
        header = SECTION_PATTERN.match(line)
        if header:
            current = header.group(1).strip()
            sections.setdefault(current, number)
            continue
        key = KEY_PATTERN.match(line)
        if key and current is not None:
            keys.setdefault((current, key.group(1).strip()), number)
    return sections, keys


def parse_experiment_config(text: str) -> ExperimentConfig:
    """
    Parse an INI experiment description.

    Args:
        text: Configuration text with [experiment], [utility], [discount],
            [game] and [output] sections

    Returns:
        Validated configuration

    Raises:
        ConfigError: On syntax errors, unknown sections or keys, and invalid values,
            carrying the offending line number where one exists
    """
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError as e:
        raise ConfigError("key outside of any section", e.lineno)
    except (configparser.DuplicateSectionError, configparser.DuplicateOptionError) as e:
        raise ConfigError(e.message.splitlines()[0], e.lineno)
    except configparser.ParsingError as e:
        line, content = e.errors[0]
        raise ConfigError(f"cannot parse {content!r}", line)

    sections, keys = _locate(text)
    data = {section: dict(parser.items(section)) for section in parser.sections()}
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        error = e.errors()[0]
        loc = tuple(str(part) for part in error["loc"])
        line = None
        if len(loc) >= 2:
            line = keys.get((loc[0], loc[1]))
        if line is None and loc:
            line = sections.get(loc[0])
        where = ".".join(loc) if loc else "config"
        raise ConfigError(f"{where}: {error['msg']}", line)


def load_experiment_config(path: str) -> ExperimentConfig:
    """
    Read and validate an experiment file.

    Raises:
        ConfigError: If the file cannot be read or is invalid
    """
    try:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e.strerror}")
    logger.debug(f"Loaded experiment file {path}")
    return parse_experiment_config(text)


def _numbers(text: str) -> Tuple[float, ...]:
    return tuple(float(x) for x in re.split(r"[\s,;]+", text.strip()) if x)


def parse_discount(spec: str, T: int, base_dir: Optional[str] = None) -> DiscountSchedule:
    """
    Build a schedule from farsighted, geometric:d, myopic[:e] or file:PATH.

    Raises:
        InvalidScheduleError: If the text cannot be interpreted or the file
            length differs from T
    """
    kind, _, arg = spec.strip().partition(":")
    kind = kind.strip().lower()
    try:
        if kind == "farsighted":
            return discount_farsighted(T)
        if kind == "geometric":
            return discount_geometric(float(arg), T)
        if kind == "myopic":
            return discount_myopic(float(arg) if arg else settings.MYOPIC_EPSILON, T)
        if kind == "file":
            path = arg.strip()
            if base_dir and not os.path.isabs(path):
                path = os.path.join(base_dir, path)
            with open(path, encoding="utf-8") as f:
                values = _numbers(f.read())
            if len(values) != T:
                raise InvalidScheduleError(f"{path} holds {len(values)} weights, horizon is {T}")
            return DiscountSchedule(values)
    except ValueError as e:
        if isinstance(e, InvalidScheduleError):
            raise
        raise InvalidScheduleError(f"Cannot read discount schedule '{spec}': {e}")
    except OSError as e:
        raise InvalidScheduleError(f"Cannot read discount file: {e.strerror}")
    raise InvalidScheduleError(f"Unknown discount schedule '{spec}'")


RESPONSE_KINDS = {
    "linear": (ResponseFunction.linear, 2),
    "quad": (ResponseFunction.quadratic, 3),
    "power": (ResponseFunction.power, 3),
    "exp": (ResponseFunction.exponential, 2),
}


def parse_response(spec: str) -> ResponseFunction:
    """
    Build a best response from linear:a,b, quad:a,b,c, power:a,b,g or exp:a,b.

    Raises:
        InvalidParameterError: On an unknown kind or a wrong parameter count
    """
    kind, _, arg = spec.strip().partition(":")
    kind = kind.strip().lower()
    if kind not in RESPONSE_KINDS:
        raise InvalidParameterError(f"Unknown best response '{kind}', expected one of {sorted(RESPONSE_KINDS)}")
    build, count = RESPONSE_KINDS[kind]
    try:
        params = _numbers(arg)
    except ValueError:
        raise InvalidParameterError(f"Non-numeric best-response parameters in '{spec}'")
    if len(params) != count:
        raise InvalidParameterError(f"'{kind}' takes {count} parameters, got {len(params)}")
    return build(*params)


def build_utility(
    kind: str,
    phi: float = 0.01,
    length: int = 5,
    coeffs: Sequence[float] = (1.0, 1.0, 1.0, 1.0),
    theta: Optional[Sequence[float]] = None,
    psi: Optional[str] = None,
    transform: str = "identity",
) -> UtilitySpec:
    """Map command-line or config options to a UtilitySpec."""
    try:
        name = UtilityName(kind)
    except ValueError:
        raise InvalidParameterError(f"Unknown utility '{kind}', expected one of {[u.value for u in UtilityName]}")
    theta = tuple(theta) if theta else None
    if theta is not None and name in (UtilityName.KB2, UtilityName.SPECTRAL, UtilityName.WELFARE):
        raise InvalidParameterError(f"Node weights are not supported by the {name.value} utility")
    if name is UtilityName.KB:
        return UtilitySpec.kb_aggregate(phi, theta)
    if name is UtilityName.KB2:
        return UtilitySpec.kb_squared(phi)
    if name is UtilityName.DIFFUSION:
        return UtilitySpec.diffusion(phi, length, theta)
    if name is UtilityName.SPECTRAL:
        return UtilitySpec.spectral()
    if name is UtilityName.WALKS:
        return UtilitySpec.walk_weighted(coeffs, theta)
    if not psi:
        raise InvalidParameterError("The welfare utility needs a best response")
    return UtilitySpec.equilibrium_welfare(parse_response(psi), transform)
