"""Pheromone-trail patrolling agents that partition a graph into balanced regions."""

__version__ = "0.1.0"
