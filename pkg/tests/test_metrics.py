import itertools
import json
import math
import random
from fractions import Fraction
from pathlib import Path

import pytest

from anvaya.corpus import load_corpus
from anvaya.linearizer import RuleProfile, linearize
from anvaya.metrics import (
    BleuStats,
    ComplianceWeights,
    align_tokens,
    bleu_stats,
    check_rules,
    compliance_score,
    corpus_bleu,
    count_inversions,
    evaluate,
    format_grid,
    format_report,
    kendall_tau,
    kendall_tau_result,
    sentence_bleu,
    tokenize_iast,
    weighted_score,
)

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN_PROFILE = RuleProfile.load(FIXTURES / "golden_profile.json")


def brute_tau(hyp, ref):
    """Independent oracle: k-th occurrence pairs with k-th occurrence, all pairs counted."""
    seen_h, seen_r = {}, {}
    hyp_keys = []
    for t in hyp:
        seen_h[t] = seen_h.get(t, 0) + 1
        hyp_keys.append((t, seen_h[t]))
    ref_pos = {}
    for j, t in enumerate(ref):
        seen_r[t] = seen_r.get(t, 0) + 1
        ref_pos[(t, seen_r[t])] = j
    seq = [ref_pos[k] for k in hyp_keys if k in ref_pos]
    m = len(seq)
    if m < 2:
        return None
    inv = sum(1 for a in range(m) for b in range(a + 1, m) if seq[a] > seq[b])
    return 1 - Fraction(2 * inv, m * (m - 1) // 2)


# --- tokenization ----------------------------------------------------------


def test_tokenize():
    assert tokenize_iast("a b  c") == ["a", "b", "c"]
    assert tokenize_iast("") == []
    assert len(tokenize_iast("mriyeta iti cintyate")) == 3
    assert tokenize_iast("rāmaḥ, vanam.") == ["rāmaḥ", ",", "vanam", "."]
    assert tokenize_iast("rāmaḥ, vanam.", detach_punctuation=False) == ["rāmaḥ,", "vanam."]


# --- BLEU ------------------------------------------------------------------


def test_bleu_identity_and_disjoint():
    x = "saḥ sugrīvam mahābalau rāghavau".split()
    assert sentence_bleu(x, x) == pytest.approx(100.0, abs=1e-9)
    assert sentence_bleu(["a", "b"], ["c", "d"], smoothing="floor") == 0.0
    assert sentence_bleu(["a", "b"], ["c", "d"], smoothing="none") == 0.0


def test_bleu_empty_ref_errors():
    with pytest.raises(ValueError):
        sentence_bleu(["a"], [])
    with pytest.raises(ValueError):
        corpus_bleu([])


def test_bleu_against_sacrebleu():
    sacrebleu = pytest.importorskip("sacrebleu")
    from sacrebleu.metrics import BLEU

    rng = random.Random(11)
    vocab = "a b c d e f g h".split()
    for smooth in ("exp", "floor", "none"):
        scorer = BLEU(effective_order=True, tokenize="none", smooth_method=smooth, smooth_value=0.0 if smooth == "floor" else None)
        for _ in range(100):
            ref = [rng.choice(vocab) for _ in range(rng.randint(1, 12))]
            hyp = [rng.choice(vocab) for _ in range(rng.randint(1, 12))]
            ours = sentence_bleu(hyp, ref, smoothing=smooth)
            theirs = scorer.sentence_score(" ".join(hyp), [" ".join(ref)]).score
            assert ours == pytest.approx(theirs, abs=1e-9), (hyp, ref, smooth)
    assert sacrebleu.__version__


def test_corpus_bleu_hand_pooled():
    p1 = ("the cat sat on the mat".split(), "the cat sat on a mat".split())
    p2 = ("a b c".split(), "a b d e".split())
    # counts by hand: p1 matches 1g 5/6, 2g 3/5, 3g 2/4, 4g 1/3; p2 1g 2/3, 2g 1/2, 3g 0/1, 4g 0/0
    c = [5 + 2, 3 + 1, 2 + 0, 1]
    t = [6 + 3, 5 + 2, 4 + 1, 3]
    hyp_len, ref_len = 9, 10
    logp = sum(math.log(ci / ti) for ci, ti in zip(c, t)) / 4
    expected = 100 * math.exp(1 - ref_len / hyp_len) * math.exp(logp)
    assert corpus_bleu([p1, p2]) == pytest.approx(expected, abs=1e-6)
    s = bleu_stats(*p1) + bleu_stats(*p2)
    assert s == BleuStats(tuple(c), tuple(t), hyp_len, ref_len)


def test_corpus_bleu_single_pair_reduction():
    pair = ("a b c d e".split(), "a b x d e".split())
    assert corpus_bleu([pair]) == pytest.approx(sentence_bleu(*pair), abs=1e-12)


def test_corpus_bleu_replication_invariance():
    rng = random.Random(13)
    checked = 0
    for _ in range(300):
        ref = [rng.choice("abcd") for _ in range(rng.randint(1, 10))]
        hyp = [rng.choice("abcd") for _ in range(rng.randint(1, 10))]
        s = bleu_stats(hyp, ref)
        full = all(c > 0 for c, t in zip(s.correct, s.total) if t > 0)
        for smooth in ("exp", "floor", "none"):
            if smooth != "none" and not full:
                continue  # smoothed pseudo-counts scale with totals
            one = corpus_bleu([(hyp, ref)], smoothing=smooth)
            for n in (2, 7):
                assert corpus_bleu([(hyp, ref)] * n, smoothing=smooth) == pytest.approx(one, abs=1e-9)
            checked += 1
    assert checked > 300


def test_smoothed_replication_changes_with_zero_order():
    # documents why the invariance is restricted: exp pseudo-counts use 1/(2*total)
    pair = ("a b c d e".split(), "a b x d e".split())
    assert corpus_bleu([pair] * 2) < corpus_bleu([pair])


def test_bleu_relabeling_invariance():
    rng = random.Random(2)
    for _ in range(50):
        ref = [rng.choice("abcde") for _ in range(8)]
        hyp = [rng.choice("abcde") for _ in range(7)]
        mapping = dict(zip("abcde", ["x1", "x2", "x3", "x4", "x5"]))
        assert sentence_bleu(hyp, ref) == sentence_bleu([mapping[t] for t in hyp], [mapping[t] for t in ref])


def test_brevity_penalty_applies():
    ref = "a b c d e f".split()
    hyp = "a b c d".split()
    assert sentence_bleu(hyp, ref) == pytest.approx(100 * math.exp(1 - 6 / 4))


# --- tau -------------------------------------------------------------------


def test_align_examples():
    assert align_tokens(["a", "b"], ["b", "a"]).mapping == {0: 1, 1: 0}
    al = align_tokens(["a", "a"], ["a"])
    assert al.mapping == {0: 0} and list(al.unaligned_hyp) == [1]
    assert align_tokens(list("abc"), list("abc")).mapping == {0: 0, 1: 1, 2: 2}


def test_align_injective_and_surface_preserving():
    rng = random.Random(4)
    for _ in range(200):
        ref = [rng.choice("abc") for _ in range(rng.randint(0, 8))]
        hyp = [rng.choice("abcd") for _ in range(rng.randint(0, 8))]
        for mode in ("greedy", "exhaustive"):
            m = align_tokens(hyp, ref, mode).mapping
            assert len(set(m.values())) == len(m)
            assert all(hyp[h] == ref[r] for h, r in m.items())


def test_tau_examples():
    assert kendall_tau(list("abcd"), list("abcd")) == 1.0
    assert kendall_tau(list("edcba"), list("abcde")) == -1.0
    res = kendall_tau_result(list("acbd"), list("abcd"))
    assert res.exact == Fraction(2, 3)
    assert kendall_tau(["a"], ["a"]) is None
    assert kendall_tau(["x", "y"], ["a", "b"]) is None


def test_tau_unaligned_counted():
    res = kendall_tau_result(["a", "b", "z"], ["b", "a", "c"])
    assert res.inversions == 1 and res.unaligned_count == 2


def test_count_inversions_matches_quadratic():
    rng = random.Random(9)
    for _ in range(300):
        xs = [rng.randint(0, 9) for _ in range(rng.randint(0, 15))]
        brute = sum(1 for i in range(len(xs)) for j in range(i + 1, len(xs)) if xs[i] > xs[j])
        assert count_inversions(xs) == brute


def test_tau_oracle_small_exhaustive():
    for m in range(2, 5):
        toks = [f"t{k}" for k in range(m)]
        for ref in itertools.permutations(toks):
            for hyp in itertools.permutations(toks):
                assert kendall_tau_result(list(hyp), list(ref)).exact == brute_tau(hyp, ref)


def test_tau_oracle_duplicates():
    rng = random.Random(21)
    for _ in range(300):
        ref = [rng.choice("abcd") for _ in range(rng.randint(1, 8))]
        hyp = ref[:]
        rng.shuffle(hyp)
        if rng.random() < 0.5 and hyp:
            hyp.pop(rng.randrange(len(hyp)))
        if rng.random() < 0.3:
            hyp.insert(rng.randint(0, len(hyp)), rng.choice("abcz"))
        res = kendall_tau_result(hyp, ref)
        want = brute_tau(hyp, ref)
        assert res.exact == want
        if want is not None:
            assert abs(res.tau - float(want)) <= 1e-12


def test_exhaustive_alignment_minimizes_inversions():
    rng = random.Random(8)
    for _ in range(100):
        ref = [rng.choice("ab") for _ in range(6)]
        hyp = ref[:]
        rng.shuffle(hyp)
        ex = kendall_tau_result(hyp, ref, alignment="exhaustive")
        gr = kendall_tau_result(hyp, ref)
        assert ex.inversions <= gr.inversions


# --- compliance ------------------------------------------------------------


def test_weights_default_and_validation():
    w = ComplianceWeights()
    assert w.maximum == 10
    with pytest.raises(ValueError):
        ComplianceWeights({1: -1, 2: 2, 3: 2, 4: 2, 5: 1})


def test_adjudicated_scores():
    assert weighted_score([1, 2, 3, 4, 5]) == 10
    assert weighted_score([2, 5]) == 3
    assert weighted_score([1, 3, 5]) == 6
    assert weighted_score([]) == 0


def test_monotone_over_all_subsets():
    subsets = [frozenset(c) for k in range(6) for c in itertools.combinations(range(1, 6), k)]
    assert len(subsets) == 32
    w = ComplianceWeights()
    for a in subsets:
        assert weighted_score(a) == sum(w.weights[r] for r in a)
        for b in subsets:
            if a <= b:
                assert weighted_score(a) <= weighted_score(b)


def test_mechanical_rules_on_gold_are_all_pass():
    for rec in load_corpus(FIXTURES / "golden.jsonl") + load_corpus(FIXTURES / "scored.jsonl"):
        res = compliance_score(rec.prose.split(), rec.annotation, profile=GOLDEN_PROFILE)
        assert res.score == 10, (rec.id, res.per_rule)


def test_mechanical_rules_detect_violations():
    rec = load_corpus(FIXTURES / "scored.jsonl")[2]
    gold = rec.annotation
    toks = rec.prose.split()
    # verb not final: rule 2 fails
    moved = toks[:-1]
    moved.insert(0, toks[-1])
    assert check_rules(moved, gold, GOLDEN_PROFILE)[2] is False
    # foreign token: alignment-dependent rules fail, rule 1 fails
    res = check_rules(toks + ["ha"], gold, GOLDEN_PROFILE)
    assert res == {1: False, 2: False, 3: False, 4: False, 5: False}
    # missing token keeps the order rules
    res = check_rules(toks[1:], gold, GOLDEN_PROFILE)
    assert res[1] is False and res[2] is True


def test_particle_rule():
    rec = load_corpus(FIXTURES / "scored.jsonl")[1]
    toks = rec.prose.split()
    i = toks.index("eva")
    swapped = toks[: i - 1] + [toks[i], toks[i - 1]] + toks[i + 1 :]
    assert check_rules(swapped, rec.annotation, GOLDEN_PROFILE)[5] is False


# --- report ----------------------------------------------------------------


def test_evaluate_perfect_and_settings():
    refs = {r.id: r.prose for r in load_corpus(FIXTURES / "golden.jsonl")}
    rep = evaluate(refs, refs)
    assert rep.corpus_bleu == pytest.approx(100.0, abs=1e-6)
    assert rep.mean_tau == 1.0
    d = json.loads(rep.to_json())
    assert d["settings"]["smoothing"] == "exp" and d["settings"]["alignment"] == "greedy"
    assert [s["id"] for s in d["per_sentence"]] == list(refs)
    assert "CORPUS" in format_report(rep)


def test_evaluate_missing_ids_and_empty():
    with pytest.raises(KeyError, match="zz"):
        evaluate({"zz": "a"}, {"a": "a"})
    with pytest.raises(ValueError):
        evaluate({}, {"a": "a"})


def test_evaluate_parallel_equals_serial():
    recs = load_corpus(FIXTURES / "golden.jsonl")
    refs = {r.id: r.prose for r in recs}
    hyps = {r.id: r.verse for r in recs}
    assert evaluate(hyps, refs).to_dict() == evaluate(hyps, refs, jobs=4).to_dict()


def test_evaluate_with_gold_compliance():
    recs = load_corpus(FIXTURES / "scored.jsonl")
    refs = {r.id: r.prose for r in recs}
    gold = {r.id: r.annotation for r in recs}
    rep = evaluate(refs, refs, gold=gold, profile=GOLDEN_PROFILE)
    assert rep.mean_compliance == 10
    assert rep.settings.profile_hash == GOLDEN_PROFILE.hash


def test_format_grid_shape():
    refs = {"a": "x y z"}
    rep = evaluate(refs, refs)
    text = format_grid({("m1", "R"): rep, ("m1", "M"): rep, ("m2", "R"): rep, ("m2", "M"): rep})
    lines = text.strip().splitlines()
    assert lines[0].split()[0] == "system"
    assert len([ln for ln in lines if ln.startswith("m")]) == 2


def test_scored_rows_bleu_within_tolerance():
    hyps = [json.loads(x) for x in (FIXTURES / "scored_hyp.jsonl").read_text(encoding="utf-8").splitlines()]
    gold = load_corpus(FIXTURES / "scored.jsonl")
    for rec, h, want in zip(gold, hyps, (90.360, 32.774, 57.067)):
        got = sentence_bleu(tokenize_iast(h["prose_pred"]), tokenize_iast(rec.prose))
        assert abs(got - want) <= 1.0


def test_linearize_then_score_is_perfect():
    for rec in load_corpus(FIXTURES / "golden.jsonl"):
        hyp = tokenize_iast(linearize(rec.annotation, GOLDEN_PROFILE))
        assert sentence_bleu(hyp, tokenize_iast(rec.prose)) == pytest.approx(100)
        assert kendall_tau(hyp, tokenize_iast(rec.prose)) == 1.0


def test_exhaustive_limit_counts_repeated_surfaces_only():
    long_distinct = [f"w{k}" for k in range(30)]
    assert kendall_tau(long_distinct[::-1], long_distinct, alignment="exhaustive") == -1.0
    dup = ["a", "b"] * 6
    with pytest.raises(ValueError, match="limited"):
        align_tokens(dup, dup, "exhaustive")
