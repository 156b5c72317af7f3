import threading

import pytest

from lib import fanout, log


class TestMapOrdered:
    @pytest.mark.parametrize("workers", [1, 4])
    def test_results_keep_submission_order(self, workers):
        assert fanout.map_ordered(lambda x: x * x, range(10), workers=workers) == [x * x for x in range(10)]

    def test_uses_several_threads(self):
        seen = set()
        barrier = threading.Barrier(2, timeout=5)

        def work(x):
            seen.add(threading.get_ident())
            barrier.wait()
            return x

        assert fanout.map_ordered(work, [1, 2], workers=2) == [1, 2]
        assert len(seen) == 2

    def test_first_exception_propagates(self):
        def work(x):
            if x == 3:
                raise ValueError("three")
            return x

        with pytest.raises(ValueError):
            fanout.map_ordered(work, range(5), workers=3)

    def test_empty_input(self):
        assert fanout.map_ordered(lambda x: x, [], workers=4) == []


class TestRunLabelled:
    @pytest.mark.parametrize("workers", [1, 3])
    def test_failures_are_returned_not_raised(self, workers):
        def boom():
            raise RuntimeError("no")

        out = fanout.run_labelled([("a", lambda: 1), ("b", boom), ("c", lambda: 3)], workers=workers)
        assert [label for label, _, _ in out] == ["a", "b", "c"]
        assert out[0][1] == 1 and out[0][2] is None
        assert out[1][1] is None and isinstance(out[1][2], RuntimeError)
        assert out[2][1] == 3

    def test_repeated_labels_keep_every_outcome(self):
        out = fanout.run_labelled([("same", lambda: 1), ("same", lambda: 2), ("other", lambda: 3)], workers=3)
        assert [(label, result) for label, result, _ in out] == [("same", 1), ("same", 2), ("other", 3)]


class TestLog:
    def test_debug_is_silent_by_default(self, monkeypatch, capsys):
        monkeypatch.setattr(log, "DEBUG", False)
        log.debug("hidden")
        assert capsys.readouterr().err == ""

    def test_debug_when_enabled(self, monkeypatch, capsys):
        monkeypatch.setattr(log, "DEBUG", True)
        log.debug("shown")
        assert capsys.readouterr().err == "[DEBUG] shown\n"

    def test_source_log_is_quiet_off_a_terminal(self, monkeypatch, capsys):
        monkeypatch.setattr(log, "DEBUG", False)
        log.source_log("Stokes", "hidden")
        assert capsys.readouterr().err == ""
        log.source_log("Stokes", "forced", tty_only=False)
        assert capsys.readouterr().err == "[Stokes] forced\n"
