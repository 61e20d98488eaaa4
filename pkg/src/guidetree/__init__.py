"""Grounded emergency-guidance retrieval backbone.

Ingests trusted preparedness documents, builds a hierarchical summary tree
(embed -> reduce -> cluster -> summarize, recursively), answers queries through
a tool-routing protocol, verifies every answer against retrieved evidence, and
scores outputs with a five-criterion harness.
"""

from .corpus import Chunk, ChunkConfig, Document, DocumentSource, chunk_document, load_corpus, tokenize
from .embed import EmbedderDescriptor, HashEmbedder, RemoteEmbedder, embed_text, hash_embed, normalize
from .vecindex import IndexedVector, SearchHit, VectorIndex, build_index, cosine
from .reduce import AffinityMatrix, LowDimEmbedding, ReduceConfig, UmapReducer, high_dim_affinities, low_dim_kernel, umap_fit, umap_loss
from .cluster import DiagonalGaussianMixture, EmConfig, GmmModel, SoftAssignment, bic, em_fit, gmm_density, responsibilities, select_k, soft_assign
from .raptor import BuildConfig, RaptorTree, TreeNode, build_tree, collapsed_retrieve, extractive_summarize, load_tree, save_tree, traverse_retrieve
from .grounding import GroundingReport, Verdict, split_sentences, support_score, verify
from .tools import ToolDescriptor, ToolRegistry, ToolRequest, ToolResponse, decode_request, encode_request, generate_checklist
from .assistant import Answer, Assistant, AssistantConfig, Session, compose_answer
from .evaluation import EvalItem, ScoreCard, load_benchmark, rule_judge, run_benchmark

__version__ = "0.1.0"
