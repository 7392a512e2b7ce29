class BridgeError(Exception):
    """Anything that stops a bridge job: bad files, bad headers, missing models."""
