"""Preprocessing package: ingestion, tiling, resizing, splits and class weights."""
