"""Virtual flow metering and forecasting with a from-scratch deep LSTM."""
