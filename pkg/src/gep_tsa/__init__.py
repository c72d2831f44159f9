"""Time series aggregation with certified optimality gaps for generation expansion planning."""
