from drfpca.cache_manager.cache_manager import CacheManager
