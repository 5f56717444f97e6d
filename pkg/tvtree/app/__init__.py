"""
The tvtree command line application.
"""
