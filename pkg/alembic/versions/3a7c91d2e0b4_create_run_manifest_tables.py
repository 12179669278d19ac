"""create run manifest tables

Revision ID: 3a7c91d2e0b4
Revises:
Create Date: 2026-10-18 10:12:41.503118

"""
from alembic import op
import sqlalchemy as sa

# revision identifiers, used by Alembic.
revision = '3a7c91d2e0b4'
down_revision = None
branch_labels = None
depends_on = None

stage = sa.Enum('ingest', 'embed', 'cells', 'paradigms', 'reinflect', 'evaluate', name='stage')


def upgrade() -> None:
    op.create_table('runs',
    sa.Column('id', sa.Integer(), autoincrement=True, nullable=False),
    sa.Column('seed', sa.Integer(), nullable=False),
    sa.Column('config_hash', sa.Text(), nullable=False),
    sa.Column('config', sa.JSON(), nullable=False),
    sa.Column('output_dir', sa.Text(), nullable=False),
    sa.Column('started_at', sa.DateTime(), nullable=False),
    sa.Column('finished_at', sa.DateTime(), nullable=True),
    sa.PrimaryKeyConstraint('id')
    )
    op.create_table('stage_runs',
    sa.Column('id', sa.Integer(), autoincrement=True, nullable=False),
    sa.Column('run_id', sa.Integer(), nullable=False),
    sa.Column('stage', stage, nullable=False),
    sa.Column('cache_key', sa.Text(), nullable=False),
    sa.Column('output_hash', sa.Text(), nullable=False),
    sa.Column('artifacts', sa.JSON(), nullable=False),
    sa.Column('seconds', sa.Float(), nullable=False),
    sa.Column('cached', sa.Boolean(), nullable=False),
    sa.ForeignKeyConstraint(['run_id'], ['runs.id'], ),
    sa.PrimaryKeyConstraint('id')
    )
    op.create_index(op.f('ix_stage_runs_cache_key'), 'stage_runs', ['cache_key'], unique=False)
    op.create_table('metric_results',
    sa.Column('id', sa.Integer(), autoincrement=True, nullable=False),
    sa.Column('run_id', sa.Integer(), nullable=False),
    sa.Column('metric', sa.Text(), nullable=False),
    sa.Column('value', sa.Float(), nullable=False),
    sa.ForeignKeyConstraint(['run_id'], ['runs.id'], ),
    sa.PrimaryKeyConstraint('id'),
    sa.UniqueConstraint('run_id', 'metric', name='unique_run_metric')
    )


def downgrade() -> None:
    op.drop_table('metric_results')
    op.drop_index(op.f('ix_stage_runs_cache_key'), table_name='stage_runs')
    op.drop_table('stage_runs')
    op.drop_table('runs')
    stage.drop(op.get_bind(), checkfirst=True)
