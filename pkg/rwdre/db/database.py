__all__ = [
    "Database",
    "load_dotenv_config",
    "resolve_database_url",
]

from datetime import datetime
from dotenv import dotenv_values
import logging
from pathlib import Path
from sqlalchemy import create_engine, Engine, select
from sqlalchemy.orm import sessionmaker
from sqlalchemy_utils import create_database, database_exists
from typing import Any, Dict, List, Optional, Type, Union
from urllib.parse import quote_plus

from ..manifest import RunManifest
from .models import *

logging.basicConfig()
logging.getLogger("sqlalchemy.engine").setLevel(logging.ERROR)

logger = logging.getLogger(__name__)


class Database:
    """
    The run-history database

    Methods
    -------
    connect(url: str, *, create_db_if_not_exist: bool = True) -> Database
        bind an engine, creating the database when missing
    create_all_tables() -> None
    open_session() -> None
        must follow connect()
    record(manifest: RunManifest) -> RunRecord
        store one manifest, with its sweep rows
    runs(command: Optional[str] = None) -> List[RunRecord]
        stored runs in insertion order
    disconnect() -> None
    """

    Session: Type = None
    engine: Engine = None
    session: Session = None
    host: str = "localhost"
    port: int = 5432

    @staticmethod
    def connection_string(
        user: str,
        password: str,
        database: str,
        host: str = host,
        port: int = port,
    ) -> str:
        return f"postgresql://{quote_plus(user)}:{quote_plus(password)}@{quote_plus(host)}:{port}/{quote_plus(database)}"

    @staticmethod
    def sqlite_url(path: Union[str, Path]) -> str:
        return f"sqlite:///{Path(path).resolve()}"

    def add(self, *args, **kwargs) -> None:
        self.session.add(*args, **kwargs)
        self.session.commit()

    def close_session(self) -> None:
        self.session.close()
        self.session = None

    def connect(self, url: str, *, create_db_if_not_exist: bool = True) -> "Database":
        self.engine = create_engine(url)
        self.Session = sessionmaker(bind=self.engine)

        if create_db_if_not_exist and not database_exists(url):
            create_database(url)
            logger.info("created run-history database %s", self.engine.url)

        return self

    def create_all_tables(self) -> None:
        Base.metadata.create_all(self.engine)

    def disconnect(self, *, close_session_if_needed: bool = True) -> None:
        if close_session_if_needed and self.session is not None:
            self.close_session()
        self.engine.dispose()
        self.engine = None

    def drop_all_tables(self, *, close_session_if_needed: bool = True) -> None:
        if close_session_if_needed and self.session is not None:
            self.close_session()
        Base.metadata.drop_all(self.engine)

    def execute(self, *args, **kwargs) -> Any:
        return self.session.execute(*args, **kwargs)

    def open_session(self) -> None:
        if self.Session is not None:
            self.session = self.Session()
        else:
            raise RuntimeError("You must call connect() before open_session()")

    def record(self, manifest: RunManifest) -> RunRecord:
        if self.session is None:
            raise RuntimeError("You must call open_session() before record()")
        run = RunRecord(
            command=manifest.command,
            seed=str(manifest.seed),
            code_version=manifest.code_version,
            started=datetime.fromisoformat(manifest.started),
            finished=datetime.fromisoformat(manifest.finished),
            config=manifest.config,
            arguments=manifest.arguments,
            result=manifest.result,
            passed=manifest.result.get("passed"),
        )
        for row in manifest.result.get("rows", []):
            run.sweep_points.append(
                SweepPoint(
                    epsilon=row["epsilon"],
                    mean=row["mean"],
                    std_error=row["se"],
                    exact_speed=row["exact_speed"],
                )
            )
        self.add(run)
        return run

    def runs(self, command: Optional[str] = None) -> List[RunRecord]:
        query = select(RunRecord).order_by(RunRecord.id)
        if command is not None:
            query = query.where(RunRecord.command == command)
        return list(self.execute(query).scalars())


def load_dotenv_config(dotenv_path: Optional[str] = None) -> Dict[str, Any]:
    config: Dict = dotenv_values(dotenv_path)

    if config.get("RWDRE_DATABASE_URL"):
        return {"url": config["RWDRE_DATABASE_URL"]}

    all_kwargs: Dict = {
        "host": config.get("PGHOST"),
        "port": config.get("PGPORT"),
        "database": config.get("PGDATABASE"),
        "user": config.get("PGUSER"),
        "password": config.get("PGPASSWORD"),
    }
    return {k: v for k, v in all_kwargs.items() if v is not None}


def resolve_database_url(config: Dict[str, Any], default: str) -> str:
    """
    The url from load_dotenv_config: an explicit url, else a PostgreSQL url
    when user, password and database are all set, else default
    """
    if "url" in config:
        return config["url"]
    if {"user", "password", "database"} <= set(config):
        return Database.connection_string(**config)
    return default
