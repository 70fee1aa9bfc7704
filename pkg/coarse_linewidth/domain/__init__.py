"""
Domain layer: graphs, metrics, decompositions, minors and the century pipeline.
"""
