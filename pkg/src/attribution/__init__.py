"""Baselines, path-integration maps, rollout and map selection"""
