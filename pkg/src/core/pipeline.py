"""
End-to-end Vertical Consensus Inference run: load, split, sample shards in
parallel, combine, report.
"""
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from joblib import Parallel, delayed
from loguru import logger

from src.core.config import (ChainConfig, ReferenceKind, ReportMode, RunConfig,
                             SamplerKind)
from src.core.exceptions import ConfigError, StageError
from src.data.loaders import (load_csv, read_partitions_file, read_posterior,
                              split, write_partitions, write_posterior)
from src.evaluation.report import Report, ReportEntry, build_report
from src.partitions.partition import Partition
from src.partitions.posterior import EmpiricalPartitionPosterior, mixture
from src.samplers.base_sampler import DpmGibbsSampler
from src.samplers.gaussian_dpm import GaussianDpmSampler
from src.samplers.poisson_dpm import PoissonDpmSampler
from src.transport.barycenter import consensus
from src.utils.helpers import derive_seed, ensure_directory, file_sha256, write_json
from src.weights.consensus_weights import weight_record

FULL_KEY = "full"


def build_sampler(kind: SamplerKind, model_config, chain: ChainConfig) -> DpmGibbsSampler:
    if SamplerKind(kind) == SamplerKind.POISSON:
        return PoissonDpmSampler(model_config, chain)
    return GaussianDpmSampler(model_config, chain)


@dataclass
class ChainRecord:
    """One finished chain: kept partitions, seed and timing."""
    key: Union[int, str]
    seed: int
    partitions: List[Partition]
    wall_time: float

    def summary(self) -> Dict:
        clusters = np.array([p.n_clusters for p in self.partitions])
        return {
            "seed": self.seed,
            "kept": len(self.partitions),
            "distinct": len(set(self.partitions)),
            "mean_clusters": float(clusters.mean()),
            "wall_time": self.wall_time,
        }


def run_chain(key: Union[int, str], kind: SamplerKind, model_config, chain: ChainConfig,
              data: np.ndarray, seed: int) -> ChainRecord:
    """Run one chain; failures are re-raised as a 'sample' StageError naming the shard."""
    start = time.perf_counter()
    try:
        partitions = build_sampler(kind, model_config, chain).sample(data, seed=seed)
    except Exception as e:
        raise StageError("sample", e, shard=key if isinstance(key, int) else None)
    return ChainRecord(key=key, seed=seed, partitions=partitions,
                       wall_time=time.perf_counter() - start)


@dataclass
class PipelineResult:
    """Everything a run produced, in memory and on disk."""
    output_dir: Path
    shard_posteriors: List[EmpiricalPartitionPosterior]
    full_posterior: Optional[EmpiricalPartitionPosterior]
    lambdas: Dict[str, np.ndarray] = field(default_factory=dict)
    mixtures: Dict[str, EmpiricalPartitionPosterior] = field(default_factory=dict)
    consensus: Dict[str, EmpiricalPartitionPosterior] = field(default_factory=dict)
    report: Optional[Report] = None
    artifacts: List[str] = field(default_factory=list)


class VCIPipeline:
    """Orchestrates one run described by a RunConfig."""

    def __init__(self, config: RunConfig, data: Optional[np.ndarray] = None):
        self.config = config
        self.data = data
        self.out = Path(config.output_dir)
        self.shards: List[np.ndarray] = []
        self.chains: List[ChainRecord] = []
        self.full_chain: Optional[ChainRecord] = None
        self.artifacts: List[str] = []
        self.hashes: Dict[str, str] = {}
        self.scheme_diagnostics: Dict[str, Dict] = {}

    @contextmanager
    def stage(self, name: str, shard: Optional[int] = None):
        try:
            yield
        except StageError:
            raise
        except Exception as e:
            logger.error(f"Stage '{name}' failed{'' if shard is None else f' on shard {shard}'}: {e}")
            raise StageError(name, e, shard=shard)

    def _artifact(self, path: Path, hashed: bool = False) -> Path:
        rel = path.relative_to(self.out).as_posix()
        self.artifacts.append(rel)
        if hashed:
            self.hashes[rel] = file_sha256(path)
        return path

    def load(self) -> np.ndarray:
        with self.stage("load"):
            if self.data is None:
                self.data = load_csv(self.config.data_path)
            self.data = np.asarray(self.data)
        return self.data

    def split(self) -> List[np.ndarray]:
        with self.stage("split"):
            self.shards = split(self.data, self.config.layout)
        logger.info(f"Split {self.data.shape[0]}x{self.data.shape[1]} data into "
                    f"{len(self.shards)} shards: {[s.shape[1] for s in self.shards]} columns")
        return self.shards

    def sample(self) -> None:
        """Run every shard chain (and the full-data chain) on the worker pool."""
        cfg = self.config
        tasks = [(k, shard) for k, shard in enumerate(self.shards)]
        if cfg.fit_full:
            tasks.append((FULL_KEY, self.data))
        workers = min(cfg.resolved_workers(), len(tasks))
        for key, _ in tasks:
            logger.debug(f"Chain {key}: seed {derive_seed(cfg.base_seed, key)}")
        logger.info(f"Sampling {len(tasks)} chains with {workers} workers")
        with self.stage("sample"):
            records = Parallel(n_jobs=workers)(
                delayed(run_chain)(key, cfg.sampler, cfg.model, cfg.chain, x,
                                   derive_seed(cfg.base_seed, key))
                for key, x in tasks)
        self.chains = [r for r in records if r.key != FULL_KEY]
        self.full_chain = next((r for r in records if r.key == FULL_KEY), None)
        for r in records:
            logger.info(f"Chain {r.key} finished in {r.wall_time:.1f}s "
                        f"({len(set(r.partitions))} distinct partitions)")

    def write_posteriors(self) -> Tuple[List[EmpiricalPartitionPosterior], Optional[EmpiricalPartitionPosterior]]:
        """Write samples and posteriors, then read the posteriors back from disk."""
        shard_dir = self.out / "shards"
        ensure_directory(shard_dir)
        posts = []
        for r in self.chains:
            with self.stage("write", shard=r.key):
                samples = shard_dir / f"shard_{r.key}.samples.txt"
                write_partitions(r.partitions, samples)
                self._artifact(samples)
                path = shard_dir / f"shard_{r.key}.posterior.txt"
                write_posterior(EmpiricalPartitionPosterior.from_samples(r.partitions), path)
                self._artifact(path, hashed=True)
                posts.append(read_posterior(path))
        full = None
        if self.full_chain is not None:
            with self.stage("write"):
                path = self.out / "full.posterior.txt"
                write_posterior(EmpiricalPartitionPosterior.from_samples(self.full_chain.partitions), path)
                self._artifact(path, hashed=True)
                full = read_posterior(path)
        return posts, full

    def combine(self, posts: List[EmpiricalPartitionPosterior], result: PipelineResult) -> None:
        cfg = self.config
        epsilons = cfg.barycenter.epsilons(len(posts)) if posts else []
        for scheme in cfg.weight_schemes:
            label = scheme.label
            with self.stage(f"consensus:{label}"):
                record = weight_record(posts, scheme)
                path = self.out / f"weights_{label}.json"
                write_json(record, path)
                self._artifact(path)

                post, lam, diagnostics = consensus(
                    posts, scheme, epsilons=epsilons, support_strategy=cfg.support,
                    metric=cfg.barycenter.metric, max_iter=cfg.barycenter.max_iter,
                    tol=cfg.barycenter.tol, require_convergence=cfg.barycenter.require_convergence)
                mix = mixture(posts, lam)
                for stem, p in (("mixture", mix), ("consensus", post)):
                    path = self.out / f"{stem}_{label}.posterior.txt"
                    write_posterior(p, path)
                    self._artifact(path)
            result.lambdas[label] = lam
            result.mixtures[label] = mix
            result.consensus[label] = post
            self.scheme_diagnostics[label] = diagnostics.to_dict()
            logger.info(f"{label}: lambda={np.round(lam, 4).tolist()}, "
                        f"barycenter {'converged' if diagnostics.solver['converged'] else 'NOT converged'} "
                        f"in {diagnostics.solver['iterations']} iterations")

    def reference(self, posts, full) -> Tuple[Union[EmpiricalPartitionPosterior, Partition], str]:
        rc = self.config.report
        if rc.reference == ReferenceKind.FULL:
            return full, "full"
        if rc.reference == ReferenceKind.SHARD:
            if rc.reference_shard >= len(posts):
                raise ConfigError(f"reference shard {rc.reference_shard} does not exist "
                                  f"({len(posts)} shards)")
            return posts[rc.reference_shard], f"shard {rc.reference_shard}"
        path = Path(rc.reference_path)
        truth = read_partitions_file(path)[0]
        self.hashes[f"reference:{path.name}"] = file_sha256(path)
        return truth, path.name

    def report(self, posts, full, result: PipelineResult) -> Report:
        rc = self.config.report
        with self.stage("report"):
            reference, ref_label = self.reference(posts, full)
            entries = [ReportEntry(f"shard {k}", "shard", p) for k, p in enumerate(posts)]
            if full is not None and not (rc.reference == ReferenceKind.FULL and rc.mode == ReportMode.DISTANCE):
                entries.append(ReportEntry("full", "full", full))
            for label in result.consensus:
                entries.append(ReportEntry(f"mixture {label}", "mixture", result.mixtures[label]))
                entries.append(ReportEntry(f"barycenter {label}", "barycenter", result.consensus[label]))
            report = build_report(entries, reference, rc, ref_label, self.config.barycenter.metric)
            csv_path, txt_path = report.write(self.out)
            self._artifact(csv_path)
            self._artifact(txt_path)
        return report

    def write_diagnostics(self, wall_time: float) -> None:
        seeds = {str(r.key): r.seed for r in self.chains}
        chains = {str(r.key): r.summary() for r in self.chains}
        if self.full_chain is not None:
            seeds[FULL_KEY] = self.full_chain.seed
            chains[FULL_KEY] = self.full_chain.summary()
        diagnostics = {
            "config": self.config.to_dict(),
            "seeds": seeds,
            "chains": chains,
            "schemes": self.scheme_diagnostics,
            "hashes": self.hashes,
            "workers": self.config.resolved_workers(),
            "wall_time": wall_time,
        }
        path = self.out / "diagnostics.json"
        write_json(diagnostics, path)
        self._artifact(path)

    def run(self) -> PipelineResult:
        start = time.perf_counter()
        ensure_directory(self.out)
        logger.info(f"Starting run in {self.out}")
        self.load()
        self.split()
        self.sample()
        posts, full = self.write_posteriors()
        result = PipelineResult(output_dir=self.out, shard_posteriors=posts, full_posterior=full)
        self.combine(posts, result)
        result.report = self.report(posts, full, result)
        self.write_diagnostics(time.perf_counter() - start)

        manifest = self.out / "manifest.json"
        write_json({"artifacts": sorted(self.artifacts + ["manifest.json"])}, manifest)
        result.artifacts = sorted(self.artifacts + ["manifest.json"])
        logger.info(f"Run finished in {time.perf_counter() - start:.1f}s; "
                    f"{len(result.artifacts)} artifacts in {self.out}")
        return result


def run_pipeline(config: RunConfig, data: Optional[np.ndarray] = None) -> PipelineResult:
    """Run the full pipeline; ``data`` overrides loading ``config.data_path``."""
    return VCIPipeline(config, data).run()
