from morphgrid.db._base import Base
from morphgrid.db.models import *
from morphgrid.db.store import ManifestStore, database_url
