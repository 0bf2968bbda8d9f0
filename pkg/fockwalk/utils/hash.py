import hashlib
import json


def hash_sha256(text):
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def config_digest(config: dict) -> str:
    return hash_sha256(json.dumps(config, sort_keys=True, default=str))
