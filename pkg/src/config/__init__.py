# Configuration module for the RL load testing toolkit
