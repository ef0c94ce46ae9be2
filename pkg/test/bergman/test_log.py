import io
import logging

from bergman.log import BergmanLogHandler
from bergman.options import Options


def test_handler_follows_log_level() -> None:
    out = io.StringIO()
    handler = BergmanLogHandler(out)
    options = Options()
    options.subscribe(handler.configure, "log.level")
    handler.install()
    try:
        logger = logging.getLogger("bergman.test")
        logger.debug("hidden")
        options.update(**{"log.level": "debug"})
        logger.debug("shown")
        options.update(**{"log.level": "warn"})
        logger.info("hidden too")
        logger.warning("careful")
    finally:
        handler.remove()

    lines = out.getvalue().splitlines()
    assert len(lines) == 2
    assert lines[0].endswith(" shown")
    assert lines[1].endswith(" careful")
    assert lines[0].startswith("[")
    assert "\x1b[" not in out.getvalue()
