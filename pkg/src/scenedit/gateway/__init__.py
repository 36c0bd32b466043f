"""Client abstractions and wire protocol for all external model services."""

from .clients import ServiceClients
from .config import BackendConfig, ServiceConfig, load_backend_config
from .protocol import (ChatMessage, ChatRequest, ChatResponse, EmbedRequest,
                       EmbedVector, cosine_similarity, image_part, text_message,
                       text_part)

__all__ = [
    "ServiceClients", "BackendConfig", "ServiceConfig", "load_backend_config",
    "ChatMessage", "ChatRequest", "ChatResponse", "EmbedRequest", "EmbedVector",
    "cosine_similarity", "image_part", "text_message", "text_part",
]
