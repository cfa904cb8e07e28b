import pytest


def test_module_call(capfd):
    """this is a silly test for module-level execution, but here for code coverage"""
    with pytest.raises(SystemExit):
        import stylenlg.__main__  # noqa


def test_help_lists_the_pipeline(invoke_command):
    res = invoke_command("--help")

    assert res.exit_code == 0
    for command in ("ingest", "train", "grid", "generate", "evaluate", "score"):
        assert command in res.output
