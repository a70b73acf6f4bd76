"""Fixed points of nonexpansive maps via an infinitesimal regularization."""
