"""Tests for the LRU cache."""
import unittest

from cache import LRUCache


class LRUCacheTest(unittest.TestCase):
    def setUp(self):
        self.cache = LRUCache(capacity=2)

    def test_put_get(self):
        self.cache.put("a", 1)
        self.assertEqual(self.cache.get("a"), 1)

    def test_eviction(self):
        self.cache.put("a", 1)
        self.cache.put("b", 2)
        self.cache.put("c", 3)
        self.assertIsNone(self.cache.get("a"))

    def tearDown(self):
        self.cache.clear()


if __name__ == "__main__":
    unittest.main()
