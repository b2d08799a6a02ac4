"""
Fitting and choosing a topic model
==================================

Train collapsed-Gibbs LDA on a planted corpus, compare candidate topic
counts, and turn document mixtures into topic assignments.
"""

import os

import numpy as np

from tweetmine.ingest import clean_text
from tweetmine.records import record_from_json
from tweetmine.synth import SynthSpec, generate_corpus
from tweetmine.topicmodel import (
    assign_topics,
    assignment_counts,
    build_vocabulary,
    load_stopwords,
    select_k,
    top_words,
    train,
)

threads = int(os.environ.get("TWEETMINE_THREADS", "1"))

# six planted topics over 300 pseudo-words
spec = SynthSpec(K=6, V=300, D=3000, seed=4, non_english_share=0.0, duplicate_share=0.0, n_sources=1)
sources, truth = generate_corpus(spec)
cleaned = [clean_text(record_from_json(r)) for r in sources[0]]
corpus = build_vocabulary([c.id for c in cleaned], [c.tokens for c in cleaned], load_stopwords(extra=["hpv"]), 2)
print(len(corpus.docs), "documents,", len(corpus.vocab), "word types")

# diagnostics over a few K: splitting topics past the true count raises Cao and lowers Deveaud
for row in select_k(corpus, [3, 6, 12], iterations=200, seed=0, threads=threads):
    print(f"K={row.K:3d}  arun={row.arun:.4f}  cao={row.cao:.4f}  deveaud={row.deveaud:.4f}")

# the default prior is alpha = 50/K, beta = 0.01
model = train(corpus, 6, iterations=500, seed=0)

# each learned topic's best planted match, by cosine over the shared vocabulary
col = {w: i for i, w in enumerate(truth.words)}
learned = np.zeros((model.K, len(truth.words)))
learned[:, [col[w] for w in model.vocab.words]] = model.phi()
cos = learned @ truth.phi.T / np.outer(np.linalg.norm(learned, axis=1), np.linalg.norm(truth.phi, axis=1))
for k in range(model.K):
    words = ", ".join(w for w, _ in top_words(model, k, 5))
    print(f"topic {k}: {words}  (best planted match {cos[k].argmax()}, cosine {cos[k].max():.3f})")

# a document keeps every topic whose probability reaches the cutoff
assignments = assign_topics(model, cutoff=0.15)
print("assigned / unassigned:", assignment_counts(assignments))
