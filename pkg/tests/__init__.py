"""Tests for the latentsim package"""
