"""Training the shot ranking discriminator on a small synthetic corpus.

Run with:  python demos/06_train_ranker.py   (about a minute)
The full desk-scale run (500+500 shots, 60 epochs, K=4096) lives in the
acceptance suite; this demo uses a slice of it to stay quick.
"""

from pathlib import Path

from previz.corpus import (CorpusConfig, build_corpus, evaluate_ranking,
                           split_corpus, train_ranker)
from previz.ranker import RankerConfig, save_checkpoint
from previz.scene import load_registry

ASSETS = Path(__file__).resolve().parents[1] / "src" / "previz" / "assets"
HERE = Path(__file__).parent

registry = load_registry(ASSETS / "registry.json")
text = (ASSETS / "corpus_10.lines").read_text()

cfg = CorpusConfig(n_positive=120, n_negative=120, seed=0)
print("building corpus: gated positives + perturbed negatives...")
pos, neg, extra = build_corpus(registry, text, cfg, extra_negatives=100)
train_pos, hold_pos = split_corpus(pos, 0.15, seed=1)
train_neg, hold_neg = split_corpus(neg, 0.15, seed=2)
samples = [s.sample() for s in train_pos + train_neg]
print(f"  {len(samples)} training shots, {len(hold_pos)}+{len(hold_neg)} held out")

model, logs = train_ranker(samples, RankerConfig(queue_size=1024), epochs=50,
                           batch_size=64, lr=1e-3, seed=0,
                           log_path=HERE / "training_log.tsv")
for log in logs[::12]:
    print(f"  epoch {log.epoch:2d}: binary {log.binary:.3f} "
          f"class {log.classes:.3f} contrastive {log.contrastive:.3f}")

report = evaluate_ranking(model, hold_pos, hold_neg + extra)
print(f"\nheld-out AUC {report.auc:.3f}, top-decile recall "
      f"{report.top_decile_recall:.3f} on a {report.n_pool}-shot pool")
save_checkpoint(model, HERE / "ranker_demo.npz")
print(f"wrote checkpoint ranker_demo.npz and training_log.tsv to {HERE}")
