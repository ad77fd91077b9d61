import logging

from seqnet.core.config import settings
from seqnet.core.logging import get_logger, resolve_level, setup_logging


# Test level names
def test_resolve_level():
    assert resolve_level("debug") == logging.DEBUG
    assert resolve_level("WARNING") == logging.WARNING
    assert resolve_level("verbose") == logging.INFO


def test_adapter_prefix_and_context():
    adapter = get_logger("seqnet.test", prefix="experiments")
    assert adapter.process("done", {}) == ("experiments: done", {})

    bound = adapter.bind(n=7, T=8)
    msg, _ = bound.process("done", {})
    assert msg == "experiments [n=7 T=8]: done"
    # Binding leaves the original adapter untouched
    assert adapter.extra == {}


def test_adapter_without_prefix():
    adapter = get_logger("seqnet.test", extra={"mode": "greedy"})
    assert adapter.process("x", {})[0] == "[mode=greedy]: x"


# Test that warnings reach the log file and lower levels do not
def test_setup_logging_writes_warnings(tmp_path, monkeypatch):
    monkeypatch.setattr(settings, "LOG_DIR", str(tmp_path / "logs"))
    setup_logging("INFO")
    try:
        log = logging.getLogger("seqnet.test")
        log.info("period summary")
        log.warning("halving exhausted")
        for handler in logging.getLogger().handlers:
            handler.flush()
        text = (tmp_path / "logs" / "seqnet.log").read_text(encoding="utf-8")
        assert "halving exhausted" in text
        assert "period summary" not in text
    finally:
        logging.basicConfig(force=True)
