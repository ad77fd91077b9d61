from concurrent.futures import ThreadPoolExecutor

from seqnet.services.memo_service import MemoryMemoService


# Test basic memo operations
def test_memory_memo_service():
    memo = MemoryMemoService()

    assert memo.get("missing") is None
    assert memo.set_if_absent("key", 1.5) == 1.5
    assert memo.set_if_absent("key", 2.5) == 1.5
    assert memo.get("key") == 1.5
    assert len(memo) == 1


def test_get_or_compute_runs_once():
    memo = MemoryMemoService()
    calls = []

    def compute():
        calls.append(1)
        return 42.0

    assert memo.get_or_compute(b"\x03", compute) == 42.0
    assert memo.get_or_compute(b"\x03", compute) == 42.0
    assert len(calls) == 1


def test_concurrent_writers_agree():
    memo = MemoryMemoService()
    with ThreadPoolExecutor(max_workers=8) as pool:
        results = list(pool.map(lambda v: memo.set_if_absent("shared", v), range(64)))
    assert len(set(results)) == 1
    assert memo.get("shared") == results[0]


def test_concurrent_get_or_compute():
    memo = MemoryMemoService()
    with ThreadPoolExecutor(max_workers=8) as pool:
        results = list(pool.map(lambda k: memo.get_or_compute(k % 4, lambda: float(k % 4)), range(64)))
    assert results == [float(k % 4) for k in range(64)]
    assert len(memo) == 4
