"""Toy Java-like language: lexer, parser, vocabulary and bug-injection corpus."""
from narfix.toylang.corpus import CorpusConfig, gen_corpus, generate, read_corpus, vocab_path_for
from narfix.toylang.lexer import LexError, Token, detokenize, lex, tokenize
from narfix.toylang.mutate import (
    MUTATION_KINDS,
    SWAP_TABLE,
    CorpusRecord,
    InapplicableMutation,
    mutate,
)
from narfix.toylang.parser import Ast, Node, ParseError, parse
from narfix.toylang.vocab import EOS_ID, MASK_ID, PAD_ID, UNK_ID, Vocabulary

__all__ = [
    "Ast", "CorpusConfig", "CorpusRecord", "EOS_ID", "InapplicableMutation", "LexError",
    "MASK_ID", "MUTATION_KINDS", "Node", "PAD_ID", "ParseError", "SWAP_TABLE", "Token",
    "UNK_ID", "Vocabulary", "detokenize", "gen_corpus", "generate", "lex", "mutate",
    "parse", "read_corpus", "tokenize", "vocab_path_for",
]
