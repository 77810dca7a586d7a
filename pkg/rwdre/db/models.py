__all__ = [
    "Base",
    "RunRecord",
    "SweepPoint",
]

from datetime import datetime
from sqlalchemy import JSON, ForeignKey, String
from sqlalchemy.orm import DeclarativeBase, Mapped, mapped_column, relationship
from typing import Any, Dict, List, Optional


# declarative base class
class Base(DeclarativeBase):
    def __str__(self) -> str:
        ret: Dict[str, Any] = dict()
        for key in dir(self):
            if not key.startswith("_") and key not in ["metadata", "registry"]:
                value: Any = getattr(self, key)
                ret[key] = value
        return str(ret)


class RunRecord(Base):
    __tablename__ = "runs"

    id: Mapped[int] = mapped_column(primary_key=True, autoincrement=True)
    command: Mapped[str]
    # unsigned 64-bit seeds overflow a signed BIGINT
    seed: Mapped[str] = mapped_column(String(20))
    code_version: Mapped[str]
    started: Mapped[datetime]
    finished: Mapped[datetime]
    config: Mapped[Dict[str, Any]] = mapped_column(JSON)
    arguments: Mapped[Dict[str, Any]] = mapped_column(JSON, default=dict)
    result: Mapped[Dict[str, Any]] = mapped_column(JSON)
    passed: Mapped[Optional[bool]]
    sweep_points: Mapped[List["SweepPoint"]] = relationship(
        back_populates="run", cascade="all, delete-orphan", order_by="SweepPoint.id"
    )


class SweepPoint(Base):
    __tablename__ = "sweep_points"

    id: Mapped[int] = mapped_column(primary_key=True, autoincrement=True)
    run_id: Mapped[int] = mapped_column(ForeignKey(RunRecord.id, ondelete="cascade"))
    epsilon: Mapped[float]
    mean: Mapped[float]
    std_error: Mapped[float]
    exact_speed: Mapped[Optional[float]]
    run: Mapped[RunRecord] = relationship(back_populates="sweep_points")
