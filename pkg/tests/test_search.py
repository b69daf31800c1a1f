"""Range scanner: determinism, checkpoint/resume, verification."""

import numpy as np
import pytest

import kurepa.kernels as kernels_mod
from kurepa.kernels import ResidueRecord
from kurepa.search import (
    CheckpointError,
    ScanConfig,
    digest_update,
    read_checkpoint,
    resume,
    scan,
    verify_sample,
)
from kurepa.store import read_records, write_records


def _small(summary):
    return [(r.p, r.r_signed) for r in summary.small_residues]


class TestScanBasics:
    def test_known_records_in_500(self):
        s = scan(ScanConfig(lo=3, hi=500, threshold=3))
        found = _small(s)
        for want in [(3, 1), (11, 1), (31, 2), (373, 2)]:
            assert want in found
        assert s.counterexamples == []
        assert s.complete
        assert s.primes_tested == 94  # odd primes below 500

    def test_solution_sets_below_1e4(self):
        s = scan(ScanConfig(lo=3, hi=10**4, threshold=3, workers=2, block_size=300))
        assert sorted(p for p, r in _small(s) if r == 1) == [3, 11]
        assert sorted(p for p, r in _small(s) if r == 2) == [31, 373]

    def test_threshold_filter_matches_definition(self):
        cfg = ScanConfig(lo=3, hi=3000, threshold=5, record_all=True)
        s = scan(cfg)
        by_filter = [(r.p, r.r_signed) for r in s.records if abs(r.r_signed) < 5]
        assert _small(s) == by_filter

    def test_threshold_zero_lists_nothing_small(self):
        s = scan(ScanConfig(lo=3, hi=1000, threshold=0))
        assert s.small_residues == []

    def test_primes_tested_skips_two(self):
        s = scan(ScanConfig(lo=2, hi=10, threshold=1))
        assert s.primes_tested == 3  # 3, 5, 7

    def test_iterations_rate_reported(self):
        s = scan(ScanConfig(lo=3, hi=5000, threshold=1))
        assert s.iterations_per_second > 0
        assert s.elapsed > 0

    def test_exact_backend_same_digest(self):
        a = scan(ScanConfig(lo=3, hi=20000, threshold=3, backend="float51"))
        b = scan(ScanConfig(lo=3, hi=20000, threshold=3, backend="exact128"))
        assert a.digest == b.digest


class TestDeterminism:
    def test_worker_count_invariance(self):
        digests = set()
        for workers in (1, 2, 5):
            s = scan(ScanConfig(lo=3, hi=30000, threshold=3, workers=workers, block_size=500))
            digests.add(s.digest)
        assert len(digests) == 1

    def test_block_size_changes_digest_schedule_not_records(self):
        a = scan(ScanConfig(lo=3, hi=20000, threshold=10, block_size=100))
        b = scan(ScanConfig(lo=3, hi=20000, threshold=10, block_size=7777))
        assert _small(a) == _small(b)
        assert a.digest == b.digest  # digest depends on records only

    def test_partition_invariance(self):
        mid = 11000
        whole = scan(ScanConfig(lo=3, hi=22000, threshold=10, record_all=True))
        left = scan(ScanConfig(lo=3, hi=mid, threshold=10, record_all=True))
        right = scan(ScanConfig(lo=mid, hi=22000, threshold=10, record_all=True))
        combined = [(r.p, r.r_signed) for r in left.records + right.records]
        assert combined == [(r.p, r.r_signed) for r in whole.records]


class TestCounterexampleDetection:
    @pytest.fixture
    def stub_kernel(self, monkeypatch):
        real = kernels_mod.residue_fast_batch

        def fake(ps, backend="float51", chunk=10000):
            out = real(ps, backend, chunk)
            out[np.asarray(ps) == 101] = 0
            return out

        monkeypatch.setattr(kernels_mod, "residue_fast_batch", fake)

    def test_stubbed_zero_residue_detected(self, stub_kernel):
        s = scan(ScanConfig(lo=3, hi=1000, threshold=3))
        assert s.counterexamples == [101]
        assert (101, 0) in _small(s)  # zero residues are small residues

    def test_detected_even_with_zero_threshold(self, stub_kernel):
        s = scan(ScanConfig(lo=3, hi=1000, threshold=0))
        assert s.counterexamples == [101]
        assert s.small_residues == []

    def test_subset_property(self, stub_kernel):
        s = scan(ScanConfig(lo=3, hi=1000, threshold=1))
        small_ps = {p for p, _ in _small(s)}
        assert set(s.counterexamples) <= small_ps


class TestConfigValidation:
    def test_empty_range(self):
        with pytest.raises(ValueError):
            ScanConfig(lo=10, hi=10)

    def test_negative_threshold(self):
        with pytest.raises(ValueError):
            ScanConfig(lo=3, hi=10, threshold=-1)

    def test_bad_workers(self):
        with pytest.raises(ValueError):
            ScanConfig(lo=3, hi=10, workers=0)

    def test_float_backend_range_limit(self):
        with pytest.raises(ValueError, match="2\\*\\*34"):
            ScanConfig(lo=3, hi=2**34 + 1, backend="float51")
        ScanConfig(lo=3, hi=2**34 + 1, backend="exact128")  # accepted

    def test_record_all_default(self):
        assert ScanConfig(lo=3, hi=10**6).effective_record_all
        assert not ScanConfig(lo=3, hi=2 * 10**8, backend="exact128").effective_record_all


class TestCheckpointResume:
    def _cfg(self, tmp_path, **kw):
        defaults = dict(lo=3, hi=50000, threshold=3, block_size=600, workers=2,
                        checkpoint_path=str(tmp_path / "scan.ckpt"))
        defaults.update(kw)
        return ScanConfig(**defaults)

    def test_interrupt_resume_matches_uninterrupted(self, tmp_path):
        cfg = self._cfg(tmp_path)
        partial = scan(cfg, max_blocks=4)
        assert not partial.complete
        assert partial.blocks_completed == 4
        finished = resume(cfg.checkpoint_path)
        ref = scan(ScanConfig(lo=3, hi=50000, threshold=3, block_size=600))
        assert finished.complete
        assert finished.digest == ref.digest
        assert _small(finished) == _small(ref)
        assert finished.primes_tested == ref.primes_tested

    def test_resume_completed_runs_no_kernel(self, tmp_path, monkeypatch):
        cfg = self._cfg(tmp_path)
        scan(cfg)
        calls = []

        def boom(ps, backend="float51", chunk=10000):
            calls.append(len(ps))
            raise AssertionError("kernel must not run on a finished checkpoint")

        monkeypatch.setattr(kernels_mod, "residue_fast_batch", boom)
        again = resume(cfg.checkpoint_path)
        assert again.complete and calls == []
        ref = scan(ScanConfig(lo=3, hi=50000, threshold=3, block_size=600))
        assert again.digest == ref.digest

    def test_resume_with_matching_config_ok(self, tmp_path):
        cfg = self._cfg(tmp_path)
        scan(cfg, max_blocks=2)
        out = resume(cfg.checkpoint_path, config=cfg)
        assert out.complete

    def test_resume_with_altered_config_rejected(self, tmp_path):
        cfg = self._cfg(tmp_path)
        scan(cfg, max_blocks=2)
        altered = ScanConfig(lo=3, hi=50000, threshold=99, block_size=600,
                             checkpoint_path=cfg.checkpoint_path)
        with pytest.raises(CheckpointError, match="does not match"):
            resume(cfg.checkpoint_path, config=altered)

    def test_resume_missing_file(self, tmp_path):
        with pytest.raises(CheckpointError):
            resume(tmp_path / "nope.ckpt")

    def test_corrupt_magic(self, tmp_path):
        path = tmp_path / "bad.ckpt"
        path.write_text("NOTMAGIC\nlo=3\n0\n0\n" + "0" * 16 + "\n")
        with pytest.raises(CheckpointError, match="magic"):
            read_checkpoint(path)

    def test_corrupt_digest(self, tmp_path):
        cfg = self._cfg(tmp_path)
        scan(cfg, max_blocks=1)
        text = (tmp_path / "scan.ckpt").read_text().splitlines()
        text[-1] = "zz"
        (tmp_path / "scan.ckpt").write_text("\n".join(text) + "\n")
        with pytest.raises(CheckpointError):
            read_checkpoint(tmp_path / "scan.ckpt")

    def test_missing_sidecar_rejected(self, tmp_path):
        cfg = self._cfg(tmp_path)
        scan(cfg, max_blocks=2)
        (tmp_path / "scan.ckpt.records.csv").unlink()
        with pytest.raises(CheckpointError, match="sidecar"):
            resume(cfg.checkpoint_path)

    def test_checkpoint_file_shape(self, tmp_path):
        cfg = self._cfg(tmp_path)
        scan(cfg, max_blocks=3)
        lines = (tmp_path / "scan.ckpt").read_text().splitlines()
        assert lines[0] == "KSCAN1"
        assert lines[1] == "lo=3"
        assert lines[2] == "hi=50000"
        assert lines[-3] == "3"  # next block ordinal
        assert lines[-2] == "3"  # completed count
        assert len(lines[-1]) == 16
        int(lines[-1], 16)
        assert not (tmp_path / "scan.ckpt.tmp").exists()  # atomic rename

    def test_out_path_used_as_record_store(self, tmp_path):
        out = tmp_path / "records.csv"
        cfg = self._cfg(tmp_path, out_path=str(out), hi=2000)
        s = scan(cfg)
        stored = read_records(out)
        assert [(r.p, r.r_signed) for r in stored] == [(r.p, r.r_signed) for r in s.records]


class TestDigest:
    def test_reference_value(self):
        # independent FNV-1a reimplementation over the 16-byte encoding
        h = 0xCBF29CE484222325
        for byte in (3).to_bytes(8, "little") + (1).to_bytes(8, "little"):
            h = ((h ^ byte) * 0x100000001B3) & ((1 << 64) - 1)
        assert digest_update(0xCBF29CE484222325, 3, 1) == h

    def test_order_sensitivity(self):
        a = digest_update(digest_update(0, 3, 1), 5, 4)
        b = digest_update(digest_update(0, 5, 4), 3, 1)
        assert a != b


class TestVerifySample:
    def _records(self, hi=4000):
        s = scan(ScanConfig(lo=3, hi=hi, threshold=1, record_all=True))
        return s.records

    def test_clean_records_verify(self):
        report = verify_sample(self._records(), n=25, seed=42)
        assert report.ok
        assert report.sampled == 25
        assert report.seed == 42

    def test_bit_flip_detected(self):
        recs = self._records()
        victim = recs[13]
        recs[13] = ResidueRecord.from_canonical(victim.p, (victim.r_canonical + 1) % victim.p)
        report = verify_sample(recs, n=len(recs), seed=0)
        assert [m[0] for m in report.mismatches] == [victim.p]

    def test_oversample_clamps(self):
        recs = self._records(hi=300)
        report = verify_sample(recs, n=10**6, seed=1)
        assert report.sampled == len(recs)
        assert report.requested == 10**6
        assert report.ok

    def test_from_file(self, tmp_path):
        recs = self._records(hi=500)
        write_records(recs, tmp_path / "r.csv")
        assert verify_sample(tmp_path / "r.csv", n=10, seed=3).ok

    def test_deterministic_sampling(self):
        recs = self._records(hi=2000)
        a = verify_sample(recs, n=5, seed=9)
        b = verify_sample(recs, n=5, seed=9)
        assert a == b
