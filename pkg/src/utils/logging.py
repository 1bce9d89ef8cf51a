import os
import logging


class Logger:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            # Project root is two levels above src/utils
            project_root = os.path.abspath(os.path.join(os.path.dirname(__file__), '..', '..'))
            log_file_path = os.environ.get('LAB_LOG_FILE') or os.path.join(project_root, 'lab.log')
            log_dir = os.path.dirname(log_file_path)
            if log_dir:
                os.makedirs(log_dir, exist_ok=True)

            logger = logging.getLogger("GeodesicLabLogger")
            level_name = os.environ.get('LAB_LOG_LEVEL', 'INFO').upper()
            logger.setLevel(getattr(logging, level_name, logging.INFO))
            if not logger.handlers:
                file_handler = logging.FileHandler(log_file_path, mode='a')
                formatter = logging.Formatter('%(asctime)s - %(levelname)s - %(message)s')
                file_handler.setFormatter(formatter)
                logger.addHandler(file_handler)
            cls._instance = logger
        return cls._instance


def console_log_callback(message):
    """Log callback handed to reports: prints progress and writes the log file"""
    print(message)
    Logger().info(message)
