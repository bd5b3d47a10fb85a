from functools import lru_cache

from sqlalchemy import create_engine
from sqlalchemy.orm import declarative_base, sessionmaker

from .config import DB_URL

Base = declarative_base()


@lru_cache(maxsize=None)
def get_engine(url: str = DB_URL):
    connect_args = {"check_same_thread": False} if url.startswith("sqlite") else {}
    return create_engine(url, connect_args=connect_args)


def init_db(url: str = DB_URL) -> sessionmaker:
    """Create the run-store tables and return a session factory bound to them."""
    from . import models  # noqa: F401
    engine = get_engine(url)
    Base.metadata.create_all(bind=engine)
    return sessionmaker(autocommit=False, autoflush=False, bind=engine)
