"""
Configuration for coxeter-forge

Settings come from the environment (optionally a .env file in the working
directory). CLI flags override them.
"""

import logging
import os

from dotenv import load_dotenv
from pydantic import BaseModel, Field

# Load environment variables
load_dotenv()

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s - %(levelname)s - %(message)s'


class Caps(BaseModel):
    """Per-round task budget for each procedure kind"""

    a: int = Field(default=64, ge=0)
    b: int = Field(default=64, ge=0)
    c: int = Field(default=64, ge=0)

    @classmethod
    def zero(cls) -> "Caps":
        return cls(a=0, b=0, c=0)

    @classmethod
    def b_only(cls, b: int = 64) -> "Caps":
        return cls(a=0, b=b, c=0)


class Settings(BaseModel):
    log_level: str = "INFO"
    seed: int = 0
    caps: Caps = Caps()
    check_every_task: bool = False
    cn_height: int = Field(default=3, ge=1)
    cn_limit: int = Field(default=100, ge=0)

    @classmethod
    def from_env(cls) -> "Settings":
        return cls(
            log_level=os.getenv('FORGE_LOG_LEVEL', 'INFO').upper(),
            seed=int(os.getenv('FORGE_SEED', '0')),
            caps=Caps(
                a=int(os.getenv('FORGE_CAP_A', '64')),
                b=int(os.getenv('FORGE_CAP_B', '64')),
                c=int(os.getenv('FORGE_CAP_C', '64')),
            ),
            check_every_task=os.getenv('FORGE_CHECK_EVERY_TASK', 'false').lower() in ('1', 'true', 'yes'),
            cn_height=int(os.getenv('FORGE_CN_HEIGHT', '3')),
            cn_limit=int(os.getenv('FORGE_CN_LIMIT', '100')),
        )


def configure_logging(level: str = "INFO") -> None:
    """Configure root logging for entry points"""
    logging.basicConfig(level=getattr(logging, level.upper(), logging.INFO), format=LOG_FORMAT)
