import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from narfix.toylang import (
    MUTATION_KINDS, CorpusConfig, InapplicableMutation, LexError, ParseError, Vocabulary,
    detokenize, gen_corpus, generate, mutate, parse, read_corpus, tokenize, vocab_path_for,
)
from narfix.toylang.lexer import classify
from narfix.toylang.templates import sample_program
from narfix.toylang.vocab import MASK_ID, PAD_ID, SPECIALS, UNK_ID


def test_tokenize_examples():
    assert tokenize("return a+b;") == ["return", "a", "+", "b", ";"]
    assert tokenize("") == []
    assert tokenize("if(x!=0)") == ["if", "(", "x", "!=", "0", ")"]


def test_maximal_munch_prefers_two_char_operators():
    assert tokenize("a<=b==c&&d") == ["a", "<=", "b", "==", "c", "&&", "d"]
    assert tokenize("a< =b") == ["a", "<", "=", "b"]


def test_lex_error_reports_position():
    with pytest.raises(LexError) as exc:
        tokenize("a # b")
    assert exc.value.position == 2


def test_classify():
    assert classify("return") == "keyword"
    assert classify("true") == "literal"
    assert classify("42") == "literal"
    assert classify("sum") == "identifier"
    assert classify("[MASK]") == "special"


def test_parse_binary_expr_program():
    ast = parse(["return", "a", "+", "b", ";"])
    ast.validate()
    binops = [i for i, n in enumerate(ast.nodes) if n.label == "binary_expr"]
    assert len(binops) == 1
    leaves = {ast.nodes[c].token_index for c in ast.nodes[binops[0]].children}
    assert leaves == {1, 2, 3}


def test_parse_error_position():
    with pytest.raises(ParseError) as exc:
        parse(["return", "+", ";"])
    assert exc.value.position == 1


def test_single_statement_root():
    ast = parse(tokenize("return 1;"))
    assert len(ast.nodes[ast.root].children) == 1


def test_parse_rejects_unbalanced():
    with pytest.raises(ParseError):
        parse(tokenize("int f ( int a ) { return a ;"))


def test_precedence_groups_multiplication_first():
    ast = parse(tokenize("return a + b * c ;"))
    top = [n for n in ast.nodes if n.label == "binary_expr"]
    # outer expression is the +, whose right operand is b * c
    outer = top[0]
    assert [ast.nodes[c].token_index for c in outer.children[:2]] == [1, 2]
    assert ast.nodes[outer.children[2]].label == "binary_expr"


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10_000))
def test_generated_programs_parse_and_roundtrip(seed):
    src = sample_program(random.Random(seed), max_functions=3)
    toks = tokenize(src)
    ast = parse(toks)
    ast.validate()
    assert len(ast.leaves) == len(toks)
    assert tokenize(detokenize(toks)) == toks


def test_mutate_operator_swap_example():
    rec = mutate(["return", "a", "+", "b", ";"], "operator-swap", 7)
    assert list(rec.buggy) == ["return", "a", "-", "b", ";"]


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 5000), st.sampled_from(MUTATION_KINDS))
def test_mutate_is_pure_and_changes_program(seed, kind):
    fixed = tokenize(sample_program(random.Random(seed)))
    try:
        a = mutate(fixed, kind, seed)
    except InapplicableMutation:
        return
    b = mutate(fixed, kind, seed)
    assert a == b
    assert a.buggy != a.fixed
    assert list(a.fixed) == fixed


def test_mutate_unknown_kind():
    with pytest.raises(ValueError):
        mutate(["return", "1", ";"], "bogus", 0)


def test_inapplicable_mutation():
    with pytest.raises(InapplicableMutation):
        mutate(tokenize("return a ;"), "condition-negate", 0)


def test_custom_swap_table():
    rec = mutate(["return", "a", "+", "b", ";"], "operator-swap", 0, swap_table={"+": "*"})
    assert rec.buggy[2] == "*"


def test_gen_corpus_rerun_identical(tmp_path):
    a, va = gen_corpus(CorpusConfig(n=100), 7, tmp_path / "a.jsonl")
    b, vb = gen_corpus(CorpusConfig(n=100), 7, tmp_path / "b.jsonl")
    assert a.read_bytes() == b.read_bytes()
    assert va.read_bytes() == vb.read_bytes()
    assert len(read_corpus(a)) == 100
    assert vocab_path_for(a) == va


def test_gen_corpus_empty(tmp_path):
    path, vpath = gen_corpus(CorpusConfig(n=0), 7, tmp_path / "e.jsonl")
    assert read_corpus(path) == []
    vocab = Vocabulary.load(vpath)
    assert vocab.itos[: len(SPECIALS)] == list(SPECIALS)


def test_corpus_records_respect_limits():
    cfg = CorpusConfig(n=200, max_tokens=60)
    recs = generate(cfg, seed=3)
    assert len(recs) == 200
    for r in recs:
        assert r.buggy != r.fixed
        assert len(r.fixed) <= 60
        assert r.mutation_kind in MUTATION_KINDS


def test_corpus_config_validation():
    with pytest.raises(ValueError):
        CorpusConfig(n=-1)
    with pytest.raises(ValueError):
        CorpusConfig(kinds=("nope",))


def test_vocabulary_reserved_ids_and_unk():
    vocab = Vocabulary.build([["b", "a"], ["c"]])
    assert vocab.itos[PAD_ID] == "[PAD]" and vocab.itos[MASK_ID] == "[MASK]"
    assert vocab.encode(["a", "zzz"]) == [len(SPECIALS), UNK_ID]
    assert vocab.decode(vocab.encode(["a", "b", "c"])) == ["a", "b", "c"]


def test_vocabulary_save_load(tmp_path):
    vocab = Vocabulary.build([["x", "y"]])
    vocab.save(tmp_path / "v.json")
    again = Vocabulary.load(tmp_path / "v.json")
    assert again == vocab and again.digest() == vocab.digest()
    with pytest.raises(ValueError):
        Vocabulary.from_list(["x", "[PAD]"])
