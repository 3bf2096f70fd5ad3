from .config import ServerConfig, load_config
from .rooms import Room, RoomRegistry

__all__ = ["ServerConfig", "load_config", "Room", "RoomRegistry"]
