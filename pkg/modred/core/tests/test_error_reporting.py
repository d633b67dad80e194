"""Tests for fatal error reporting."""

from __future__ import annotations

import logging

from modred.core.error_reporting import report_fatal
from modred.core.errors import DataError


def test_unexpected_error_is_logged_with_traceback_and_sent(mocker, caplog):
    capture = mocker.patch("sentry_sdk.capture_exception")
    scope = mocker.patch("sentry_sdk.new_scope")
    exc = RuntimeError("boom")

    with caplog.at_level(logging.ERROR):
        report_fatal(exc, context={"command": "pretrain", "channel": 3})

    capture.assert_called_once_with(exc)
    tagged = scope.return_value.__enter__.return_value.set_tag
    tagged.assert_any_call("command", "pretrain")
    tagged.assert_any_call("channel", 3)
    assert caplog.records[-1].exc_info[1] is exc


def test_expected_error_is_logged_without_traceback(mocker, caplog):
    mocker.patch("sentry_sdk.capture_exception")
    with caplog.at_level(logging.ERROR):
        report_fatal(DataError("missing waveform"))
    record = caplog.records[-1]
    assert record.exc_info is None
    assert "DataError: missing waveform" in record.getMessage()


def test_sentry_failure_is_swallowed(mocker):
    mocker.patch("sentry_sdk.capture_exception", side_effect=RuntimeError("no network"))
    report_fatal(ValueError("bad"))
