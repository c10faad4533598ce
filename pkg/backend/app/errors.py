"""
Exception hierarchy for molga
"""

from typing import Any, List, Optional


class MolgaError(Exception):
    """Base class for all toolkit errors"""


class ValenceError(MolgaError):
    """Raised when a molecule cannot satisfy its valence rules"""


class SmilesParseError(MolgaError):
    """Unsupported or malformed SMILES input"""

    def __init__(self, text: str, offset: int, reason: str):
        self.text = text
        self.offset = offset
        self.reason = reason
        super().__init__(f"{reason} at offset {offset} in {text!r}")


class TokenError(MolgaError):
    """Unknown SELFIES token or a string that breaks the length bound"""


class EncodingError(MolgaError):
    """A molecule cannot be written with the configured alphabet"""

    def __init__(self, atom_index: int, reason: str):
        self.atom_index = atom_index
        self.reason = reason
        super().__init__(f"cannot encode atom {atom_index}: {reason}")


class DatasetError(MolgaError):
    """Dataset file is unusable"""


class DescriptorError(MolgaError):
    """Descriptor inputs are missing or incomplete"""


class FingerprintError(MolgaError):
    """Invalid fingerprint parameters or incompatible fingerprints"""


class DiscriminatorError(MolgaError):
    """Discriminator training diverged or was fed bad input"""


class ConfigError(MolgaError):
    """Invalid configuration"""


class RunAborted(MolgaError):
    """A GA run stopped before finishing; carries what was computed so far"""

    def __init__(self, message: str, partial: Optional[Any] = None):
        self.partial = partial
        super().__init__(message)


class ReportError(MolgaError):
    """A run directory is missing files needed for a report"""

    def __init__(self, run_dir: str, missing: List[str]):
        self.run_dir = run_dir
        self.missing = missing
        super().__init__(f"run directory {run_dir} is missing: {', '.join(missing)}")


class ParetoError(MolgaError):
    """A point does not dominate the reference (nadir) point"""
