"""Target generators and experiment drivers."""
