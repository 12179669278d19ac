"""Run manifest and stage cache models"""
from enum import Enum, unique

from sqlalchemy import (
    JSON,
    Boolean,
    Column,
    DateTime,
    Float,
    ForeignKey,
    Integer,
    Text,
    UniqueConstraint,
)
from sqlalchemy import Enum as SQLEnum
from sqlalchemy.orm import relationship

from morphgrid.db._base import Base


@unique
class Stage(Enum):
    """Pipeline stages in execution order"""

    ingest = "ingest"
    embed = "embed"
    cells = "cells"
    paradigms = "paradigms"
    reinflect = "reinflect"
    evaluate = "evaluate"


StageEnum = SQLEnum(Stage, name="stage")


class Run(Base):
    """One execution of one or more stages for one seed

    Attributes:
        seed (int): master seed of the run
        config_hash (str): digest of the configuration snapshot
        config (dict): configuration snapshot
        output_dir (str): directory holding the run's artifacts
        started_at (datetime): when the run started
        finished_at (datetime): when the run finished, None while running
    """

    __tablename__ = "runs"

    id = Column(Integer, primary_key=True, autoincrement=True)
    seed = Column(Integer, nullable=False)
    config_hash = Column(Text, nullable=False)
    config = Column(JSON, nullable=False)
    output_dir = Column(Text, nullable=False)
    started_at = Column(DateTime, nullable=False)
    finished_at = Column(DateTime)

    stage_runs = relationship("StageRun", back_populates="run")
    metric_results = relationship("MetricResult", back_populates="run")


class StageRun(Base):
    """A stage execution or cache hit within a run

    Attributes:
        run_id (int): id in the runs table
        stage (Stage): stage that ran
        cache_key (str): digest of upstream artifacts, config section and seed
        output_hash (str): digest of the artifacts the stage wrote
        artifacts (dict): artifact name to its content digest
        seconds (float): wall time spent, 0 for cache hits
        cached (bool): whether the stage was skipped
    """

    __tablename__ = "stage_runs"

    id = Column(Integer, primary_key=True, autoincrement=True)
    run_id = Column(Integer, ForeignKey("runs.id"), nullable=False)
    stage = Column(StageEnum, nullable=False)
    cache_key = Column(Text, nullable=False, index=True)
    output_hash = Column(Text, nullable=False)
    artifacts = Column(JSON, nullable=False)
    seconds = Column(Float, nullable=False)
    cached = Column(Boolean, nullable=False, default=False)

    run = relationship("Run", back_populates="stage_runs")


class MetricResult(Base):
    """Attributes:
    run_id (int): id in the runs table
    metric (str): metric name, e.g. f_grid
    value (float): metric value
    """

    __tablename__ = "metric_results"

    id = Column(Integer, primary_key=True, autoincrement=True)
    run_id = Column(Integer, ForeignKey("runs.id"), nullable=False)
    metric = Column(Text, nullable=False)
    value = Column(Float, nullable=False)

    run = relationship("Run", back_populates="metric_results")

    __table_args__ = (
        UniqueConstraint("run_id", "metric", name="unique_run_metric"),
    )
