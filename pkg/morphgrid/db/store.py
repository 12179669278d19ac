"""Session handling for the manifest store"""
import datetime
import logging
import os
from pathlib import Path
from typing import Dict, Optional, Union

from sqlalchemy import create_engine, select
from sqlalchemy.orm import sessionmaker

from morphgrid.db._base import Base
from morphgrid.db.models.run import MetricResult, Run, Stage, StageRun

logger = logging.getLogger(__name__)


def database_url(output_dir: Union[str, Path]) -> str:
    """PostgreSQL when MORPHGRID_DB_HOST is set, else a SQLite file in output_dir"""
    if os.environ.get("MORPHGRID_DB_HOST"):
        return "postgresql+psycopg2://{}:{}@{}:{}/{}".format(
            os.environ.get("MORPHGRID_DB_USER"),
            os.environ.get("MORPHGRID_DB_PASSWORD"),
            os.environ.get("MORPHGRID_DB_HOST"),
            os.environ.get("MORPHGRID_DB_PORT"),
            os.environ.get("MORPHGRID_DB_NAME"),
        )
    return f"sqlite:///{Path(output_dir).resolve() / 'manifest.sqlite'}"


def _now() -> datetime.datetime:
    return datetime.datetime.now(datetime.timezone.utc).replace(tzinfo=None)


class ManifestStore:
    """Records runs, stage executions and metrics; answers cache lookups"""

    def __init__(self, url: str):
        self.engine = create_engine(url)
        Base.metadata.create_all(self.engine)
        self.Session = sessionmaker(bind=self.engine, expire_on_commit=False)

    def close(self):
        self.engine.dispose()

    def start_run(self, seed: int, config_hash: str, config: dict, output_dir: str) -> int:
        with self.Session() as session:
            run = Run(
                seed=seed,
                config_hash=config_hash,
                config=config,
                output_dir=str(output_dir),
                started_at=_now(),
            )
            session.add(run)
            session.commit()
            return run.id

    def finish_run(self, run_id: int):
        with self.Session() as session:
            run = session.get(Run, run_id)
            run.finished_at = _now()
            session.commit()

    def record_stage(
        self,
        run_id: int,
        stage: Stage,
        cache_key: str,
        output_hash: str,
        artifacts: Dict[str, str],
        seconds: float,
        cached: bool,
    ):
        with self.Session() as session:
            session.add(
                StageRun(
                    run_id=run_id,
                    stage=stage,
                    cache_key=cache_key,
                    output_hash=output_hash,
                    artifacts=artifacts,
                    seconds=seconds,
                    cached=cached,
                )
            )
            session.commit()

    def lookup(self, stage: Stage, cache_key: str) -> Optional[Dict[str, str]]:
        """Artifact digests of the latest execution with this cache key"""
        with self.Session() as session:
            row = session.execute(
                select(StageRun)
                .where(StageRun.stage == stage, StageRun.cache_key == cache_key)
                .order_by(StageRun.id.desc())
                .limit(1)
            ).scalar_one_or_none()
            return None if row is None else dict(row.artifacts)

    def record_metrics(self, run_id: int, metrics: Dict[str, float]):
        with self.Session() as session:
            for name, value in sorted(metrics.items()):
                session.add(MetricResult(run_id=run_id, metric=name, value=float(value)))
            session.commit()

    def metrics(self, run_id: int) -> Dict[str, float]:
        with self.Session() as session:
            rows = session.execute(
                select(MetricResult).where(MetricResult.run_id == run_id)
            ).scalars()
            return {r.metric: r.value for r in rows}
