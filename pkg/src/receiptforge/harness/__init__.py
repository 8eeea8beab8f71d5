"""
Синтетический корпус и оценка конвейера
"""
from .corpus import Corpus, CorpusSample, generate_corpus, load_corpus
from .evaluation import EvalReport, evaluate, summarize
from .synth import GroundTruth, SyntheticSample, SyntheticSpec, generate

__all__ = [
    "Corpus",
    "CorpusSample",
    "EvalReport",
    "GroundTruth",
    "SyntheticSample",
    "SyntheticSpec",
    "evaluate",
    "generate",
    "generate_corpus",
    "load_corpus",
    "summarize",
]
