"""Community-aware sentiment signals and deep Q-learning trading agents.

The pipeline: ingest prices / tweets / follower edges / entity relations,
score influencers on the follower graph, expand ticker keywords through
typed entity relations, aggregate signed tweet effect scores into one
sentiment value per trading day, then train and backtest buy/sell/hold
Q-learning agents on the combined price + sentiment state.
"""

__version__ = "0.1.0"
